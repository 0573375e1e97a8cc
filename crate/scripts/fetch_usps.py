#!/usr/bin/env python3
"""Fetch the USPS digits (9298 x 16x16) and write them as an IDX3 uint8 file.

The images come from `usps_resampled.mat` inside the pyGPs source
distribution on PyPI. Pixels in [-1, 1] are mapped to round((x + 1) / 2 * 255).

usage: scripts/fetch_usps.py [output_path]
"""
import io
import json
import struct
import sys
import tarfile
import urllib.request

import numpy as np
import scipy.io

PYPI_JSON = "https://pypi.org/pypi/pyGPs/json"
MEMBER = "pyGPs-1.3.5/pyGPs/Demo/USPS/usps_resampled.mat"


def main():
    out = sys.argv[1] if len(sys.argv) > 1 else "data/usps-images-idx3-ubyte"
    meta = json.load(urllib.request.urlopen(PYPI_JSON))
    url = next(u["url"] for u in meta["urls"] if u["filename"].endswith(".tar.gz"))
    blob = urllib.request.urlopen(url).read()
    with tarfile.open(fileobj=io.BytesIO(blob), mode="r:gz") as tar:
        mat = scipy.io.loadmat(io.BytesIO(tar.extractfile(MEMBER).read()))
    x = np.hstack([mat["train_patterns"], mat["test_patterns"]]).T
    assert x.shape == (9298, 256), x.shape
    pixels = np.clip(np.round((x + 1.0) / 2.0 * 255.0), 0, 255).astype(np.uint8)
    # the .mat stores each image column-major (MATLAB), rows of the IDX are row-major
    pixels = pixels.reshape(-1, 16, 16).transpose(0, 2, 1).reshape(-1, 256)
    with open(out, "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, pixels.shape[0], 16, 16))
        f.write(pixels.tobytes())
    print(f"wrote {out}: {pixels.shape[0]} images, 16x16")


if __name__ == "__main__":
    main()
