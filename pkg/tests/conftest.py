"""Shared builders for small deterministic test inputs."""

import numpy as np
import pytest

from seqwin import Descriptor


def make_dense_pair(n_ref=60, n_query=50, dim=16, seed=0, noise=0.05):
    """A query traverse that follows the reference route frame for frame."""
    rng = np.random.default_rng(seed)
    base = rng.standard_normal((n_ref, dim))
    refs = [Descriptor.dense(row) for row in base]
    queries = [
        Descriptor.dense(base[i] + noise * rng.standard_normal(dim))
        for i in range(n_query)
    ]
    return refs, queries


def pgm_bytes(pixels, maxval=255, comment=None):
    """Serialize a 2-d uint array as a binary P5 PGM."""
    pixels = np.asarray(pixels)
    h, w = pixels.shape
    header = f"P5\n{w} {h}\n"
    if comment is not None:
        header = f"P5\n# {comment}\n{w} {h}\n"
    header += f"{maxval}\n"
    if maxval < 256:
        raster = pixels.astype(np.uint8).tobytes()
    else:
        raster = pixels.astype(">u2").tobytes()
    return header.encode("ascii") + raster


@pytest.fixture
def write_pgm(tmp_path):
    def _write(name, pixels, maxval=255, comment=None):
        path = tmp_path / name
        path.write_bytes(pgm_bytes(pixels, maxval=maxval, comment=comment))
        return path

    return _write
