#!/usr/bin/env python3
"""Download the a1a training set from the LIBSVM dataset collection into data/.

Needs plain HTTPS access; in sandboxes without it, obtain the file manually
and place it at data/a1a (or point $QPIPM_A1A at it).
"""

import sys
import urllib.request
from pathlib import Path

URLS = [
    "https://www.csie.ntu.edu.tw/~cjlin/libsvmtools/datasets/binary/a1a",
]

EXPECTED_SAMPLES = 1605


def main() -> int:
    dest = Path(__file__).resolve().parent.parent / "data" / "a1a"
    if dest.exists():
        print(f"{dest} already present")
        return 0
    dest.parent.mkdir(parents=True, exist_ok=True)
    for url in URLS:
        try:
            print(f"fetching {url} ...")
            with urllib.request.urlopen(url, timeout=60) as resp:
                payload = resp.read()
        except OSError as exc:
            print(f"  failed: {exc}")
            continue
        n = sum(1 for line in payload.splitlines() if line.strip())
        if n != EXPECTED_SAMPLES:
            print(f"  unexpected sample count {n} (wanted {EXPECTED_SAMPLES}); skipping")
            continue
        dest.write_bytes(payload)
        print(f"wrote {dest} ({n} samples)")
        return 0
    print("all sources failed", file=sys.stderr)
    return 1


if __name__ == "__main__":
    raise SystemExit(main())
