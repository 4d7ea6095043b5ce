#!/usr/bin/env python3
# Copyright 2026 The Declutter Authors
# SPDX-License-Identifier: Apache-2.0
"""Independent numpy re-implementation used to cross-check the frozen goldens.

Usage: build/tests/golden_writer && python3 tests/golden/oracle.py
"""
import json
import pathlib
import struct
import sys
import tempfile

import numpy as np

HERE = pathlib.Path(__file__).resolve().parent
DUMPS = pathlib.Path(tempfile.gettempdir()) / "declutter_oracle"


def read_dclt(path):
    data = path.read_bytes()
    assert data[:4] == b"DCLT"
    version, count = struct.unpack_from("<II", data, 4)
    assert version == 1
    pos, out = 12, {}
    for _ in range(count):
        (n,) = struct.unpack_from("<H", data, pos)
        pos += 2
        name = data[pos:pos + n].decode()
        pos += n
        rank = data[pos]
        pos += 1
        dims = struct.unpack_from("<%dI" % rank, data, pos)
        pos += 4 * rank
        size = int(np.prod(dims))
        out[name] = np.frombuffer(data, "<f4", size, pos).reshape(dims).astype(np.float64)
        pos += 4 * size
    assert pos == len(data)
    return out


def conv(x, w, b, stride=1, upsample=1):
    if upsample > 1:
        x = x.repeat(upsample, axis=1).repeat(upsample, axis=2)
    _, h, wd = x.shape
    o, _, kh, kw = w.shape
    oh, ow = -(-h // stride), -(-wd // stride)
    ph = max((oh - 1) * stride + kh - h, 0)
    pw = max((ow - 1) * stride + kw - wd, 0)
    xp = np.pad(x, ((0, 0), (ph // 2, ph - ph // 2), (pw // 2, pw - pw // 2)))
    out = np.empty((o, oh, ow))
    for i in range(oh):
        for j in range(ow):
            patch = xp[:, i * stride:i * stride + kh, j * stride:j * stride + kw]
            out[:, i, j] = np.tensordot(w, patch, axes=([1, 2, 3], [0, 1, 2])) + b
    return out


relu = lambda v: np.maximum(v, 0.0)
sigmoid = lambda v: 1.0 / (1.0 + np.exp(-v))


def blur(image):
    taps = np.exp(-((np.arange(13) - 6) ** 2) / 2.0)
    taps /= taps.sum()
    padded = np.pad(image, ((0, 0), (6, 6), (6, 6)), mode="reflect")
    _, h, w = image.shape
    rows = sum(taps[i] * padded[:, i:i + h, :] for i in range(13))
    return sum(taps[j] * rows[:, :, j:j + w] for j in range(13))


def decomposer_forward(p, image, masks):
    def features(x):
        for i in range(4):
            x = relu(conv(x, p[f"feat.conv{i + 1}.w"], p[f"feat.conv{i + 1}.b"], stride=2))
        return x

    def fc(x, name):
        return p[name + ".w"] @ x + p[name + ".b"]

    def scores(x):
        for i in range(2):
            x = relu(conv(x, p[f"score.conv{i + 1}.w"], p[f"score.conv{i + 1}.b"]))
        flat = x.ravel()
        return [float(sigmoid(fc(relu(fc(flat, h + ".fc1")), h + ".fc2"))[0]) for h in ("score.aes", "score.content")]

    side = image.shape[1]
    grid = side // 8
    blurred = blur(image)
    image_features = features(image).ravel()
    subs, beta_logits, gamma_logits = [], [], []
    for m in masks:
        subs.append(scores(features(np.where(m > 0, blurred, image))))
        cells = m[0].reshape(grid, side // grid, grid, side // grid).mean(axis=(1, 3)).ravel()
        hidden = relu(fc(np.concatenate([image_features, cells]), "mix.fc1"))
        beta_logits.append(fc(hidden, "mix.beta")[0])
        gamma_logits.append(fc(hidden, "mix.gamma")[0])
    softmax = lambda v: np.exp(np.array(v) - max(v)) / np.exp(np.array(v) - max(v)).sum()
    beta, gamma = softmax(beta_logits), softmax(gamma_logits)
    subs = np.array(subs)
    overall = (beta @ subs[:, 0], gamma @ subs[:, 1])
    q = beta * (overall[0] - subs[:, 0]) + gamma * (overall[1] - subs[:, 1])
    return subs, beta, gamma, q


def check(name, got, want, tol):
    err = float(np.max(np.abs(np.asarray(got).ravel() - np.asarray(want).ravel())))
    status = "ok" if err <= tol else "MISMATCH"
    print(f"{name}: max abs diff {err:.2e} {status}")
    return err <= tol


def main():
    ok = True

    p = read_dclt(DUMPS / "three_layer.dclt")
    h = relu(conv(p["input.x"], p["conv.w"], p["conv.b"]))
    y = sigmoid(p["fc.w"] @ h.ravel() + p["fc.b"])
    ok &= check("diff_three_layer", y, json.loads((HERE / "diff_three_layer.json").read_text())["y"], 1e-5)

    p = read_dclt(DUMPS / "inpainter.dclt")
    image, mask = p["input.image"], p["input.mask"]
    x = np.concatenate([image * (1.0 - mask), mask])
    for i in range(6):
        x = relu(conv(x, p[f"gen.enc{i + 1}.w"], p[f"gen.enc{i + 1}.b"], stride=2 if i % 2 else 1))
    for i in range(6):
        x = relu(conv(x, p[f"gen.dec{i + 1}.w"], p[f"gen.dec{i + 1}.b"], upsample=2 if i % 2 else 1))
    y = sigmoid(conv(x, p["gen.dec7.w"], p["gen.dec7.b"]))
    b = sigmoid(conv(x, p["artifact.conv.w"], p["artifact.conv.b"]))
    golden = json.loads((HERE / "inpaint_generate.json").read_text())
    ok &= check("inpaint_generate.y", y.transpose(1, 2, 0), golden["y"], 1e-5)
    ok &= check("inpaint_generate.b", b, golden["b"], 1e-5)

    p = read_dclt(DUMPS / "decomposer.dclt")
    masks = [p[k] for k in sorted(k for k in p if k.startswith("input.mask."))]
    subs, beta, gamma, q = decomposer_forward(p, p["input.image"], masks)
    golden = json.loads((HERE / "decomposer.json").read_text())
    ok &= check("decomposer.score_subimage", subs[1], golden["score_subimage"], 1e-5)
    ok &= check("decomposer.beta", beta, golden["beta"], 1e-5)
    ok &= check("decomposer.gamma", gamma, golden["gamma"], 1e-5)
    ok &= check("decomposer.q", q, golden["q"], 1e-6)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
