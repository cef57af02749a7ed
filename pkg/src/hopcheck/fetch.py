"""Best-effort downloader for the public source datasets.

The acceptance checks that need real data look for the files below under
the directory named by the HOPCHECK_DATA_DIR environment variable and
skip cleanly when they are absent, so this module is optional plumbing:
run it once on a networked machine, then point HOPCHECK_DATA_DIR at the
destination.

    python3 -m hopcheck.fetch --dest data/
"""

from __future__ import annotations

import argparse
import sys
import urllib.error
import urllib.request
from pathlib import Path

DATA_DIR_ENV_VAR = "HOPCHECK_DATA_DIR"

# filename -> candidate download URLs, tried in order
SOURCES: dict[str, tuple[str, ...]] = {
    "politihop_train.tsv": (
        "https://raw.githubusercontent.com/copenlu/politihop/master/data/politihop_train.tsv",
    ),
    "politihop_valid.tsv": (
        "https://raw.githubusercontent.com/copenlu/politihop/master/data/politihop_valid.tsv",
    ),
    "politihop_test.tsv": (
        "https://raw.githubusercontent.com/copenlu/politihop/master/data/politihop_test.tsv",
    ),
    "liar_plus_train.tsv": (
        "https://raw.githubusercontent.com/Tariq60/LIAR-PLUS/master/dataset/tsv/train2.tsv",
    ),
    "liar_plus_valid.tsv": (
        "https://raw.githubusercontent.com/Tariq60/LIAR-PLUS/master/dataset/tsv/val2.tsv",
    ),
    "liar_plus_test.tsv": (
        "https://raw.githubusercontent.com/Tariq60/LIAR-PLUS/master/dataset/tsv/test2.tsv",
    ),
    # FEVER shared-task data (large)
    "fever_train.jsonl": (
        "https://fever.ai/download/fever/train.jsonl",
        "https://s3-eu-west-1.amazonaws.com/fever.public/train.jsonl",
    ),
    "fever_dev.jsonl": (
        "https://fever.ai/download/fever/shared_task_dev.jsonl",
        "https://s3-eu-west-1.amazonaws.com/fever.public/shared_task_dev.jsonl",
    ),
}


def _download(urls: tuple[str, ...], timeout: float) -> bytes:
    errors = []
    for url in urls:
        print(f"fetching {url} ...")
        try:
            with urllib.request.urlopen(url, timeout=timeout) as response:
                data = response.read()
        except (urllib.error.URLError, OSError) as error:
            errors.append(f"{url}: {error}")
            continue
        if data:
            return data
        errors.append(f"{url}: empty response")
    raise RuntimeError("all mirrors failed: " + "; ".join(errors))


def fetch(dest: str | Path, names: list[str] | None = None, timeout: float = 60.0) -> list[Path]:
    """Download the requested files (default: all) into dest; returns the
    paths written. Existing files are kept."""
    dest = Path(dest)
    dest.mkdir(parents=True, exist_ok=True)
    written = []
    for name in names or sorted(SOURCES):
        if name not in SOURCES:
            raise ValueError(f"unknown dataset file {name!r}; expected one of {sorted(SOURCES)}")
        target = dest / name
        if target.exists() and target.stat().st_size > 0:
            print(f"kept existing {target}")
            written.append(target)
            continue
        data = _download(SOURCES[name], timeout)
        target.write_bytes(data)
        print(f"wrote {target} ({len(data)} bytes)")
        written.append(target)
    return written


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--dest", required=True, help="destination directory")
    parser.add_argument("--only", nargs="*", help="subset of files to fetch")
    args = parser.parse_args(argv)
    try:
        fetch(args.dest, args.only)
    except (RuntimeError, ValueError, OSError) as error:
        print(f"error: {error}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
