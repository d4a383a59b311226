#!/usr/bin/env python3
"""Prepend LICENSE_HEADER.txt to every C++ source that lacks it."""

import pathlib
import sys

ROOT = pathlib.Path(__file__).resolve().parent.parent
DIRS = ["include", "src", "tests", "tools", "python"]
SUFFIXES = {".hpp", ".cpp"}


def main():
    header = (ROOT / "LICENSE_HEADER.txt").read_text()
    if not header.endswith("\n"):
        header += "\n"
    changed = 0
    for d in DIRS:
        for path in sorted((ROOT / d).rglob("*")):
            if path.suffix not in SUFFIXES or not path.is_file():
                continue
            text = path.read_text()
            if text.startswith(header):
                continue
            path.write_text(header + "\n" + text)
            changed += 1
    print(f"header added to {changed} files")
    return 0


if __name__ == "__main__":
    sys.exit(main())
