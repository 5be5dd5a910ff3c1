"""Shared helpers for the test suite."""

from __future__ import annotations

import glob
import os

import numpy as np

import einc
from einc.frontend import load_source
from einc.high import fuse
from einc.pipeline import compile_source, normalize_program
from einc.runtime import Image
from einc.sizemgmt import PassConfig
from einc.translate import translate_program

CORPUS_DIR = os.path.join(os.path.dirname(einc.__file__), "corpus")
CORPUS = sorted(glob.glob(os.path.join(CORPUS_DIR, "*.ddr")))
CORPUS_IDS = [os.path.basename(p)[:-4] for p in CORPUS]


def corpus_source(name: str) -> str:
    with open(os.path.join(CORPUS_DIR, f"{name}.ddr")) as fh:
        return fh.read()


def high(src: str):
    return translate_program(load_source(src))


def high_norm(src: str, fuse_tensors: bool = False):
    return normalize_program(fuse(high(src), fuse_tensors))


def compile_low(src: str, **flags):
    return compile_source(src, PassConfig(**flags)).low


def random_affine(d: int, rng, scale: float = 0.15):
    A = np.eye(d) + scale * rng.standard_normal((d, d))
    b = 0.1 * rng.standard_normal(d)
    return A, b


def random_image(rng, dim: int, shape=(), size: int = 7, affine: bool = True, offset: float = 3.0) -> Image:
    A, b = random_affine(dim, rng) if affine else (None, None)
    data = rng.standard_normal((size,) * dim + tuple(shape)) + offset
    return Image.from_array(data, dim, A, b)


def random_bindings(inputs, rng, size: int = 7, affine: bool = True) -> dict:
    """Random values for every declared input (images and tensors)."""
    out = {}
    for name, t in inputs:
        if t.kind == "image":
            out[name] = random_image(rng, t.dim, t.shape, size, affine)
        else:
            out[name] = rng.standard_normal(t.shape)
    return out


def interior_points(bindings: dict, dim: int, rng, n: int, lo: float = 2.6, hi: float = 3.4) -> np.ndarray:
    """World points whose index-space coordinates lie in [lo, hi] for the first image."""
    images = [v for v in bindings.values() if isinstance(v, Image)]
    if not images:
        return rng.standard_normal((n, max(dim, 1)))
    img = images[0]
    return np.array([img.to_world(rng.uniform(lo, hi, img.dim)) for _ in range(n)])


def rel_err(a, b) -> float:
    """Largest componentwise error relative to 1 + |b|."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b) / (1.0 + np.abs(b)))) if a.size else 0.0
