"""Compare idprov extraction with Universal Ctags over a directory tree.

    python tools/ctags_diff.py /usr/lib/python3.10 [--limit N] [--show N]
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))
sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

import ctags_oracle  # noqa: E402

from idprov.extract import decode_source, extract_code_identifiers  # noqa: E402


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("root", type=Path)
    ap.add_argument("--limit", type=int, default=0)
    ap.add_argument("--show", type=int, default=10)
    args = ap.parse_args()

    root = args.root.resolve()
    rel = sorted(
        str(p.relative_to(root)) for p in root.rglob("*")
        if p.is_file() and p.suffix.lower() == ".py" and "\t" not in str(p)
    )
    if args.limit:
        rel = rel[: args.limit]
    expected = ctags_oracle.run(root, rel)
    bad = 0
    for path in rel:
        got = {
            (i.name, i.kind.value)
            for i in extract_code_identifiers(decode_source((root / path).read_bytes()))
        }
        if got != expected[path]:
            bad += 1
            if bad <= args.show:
                print(f"--- {path}")
                print("  missing:", sorted(expected[path] - got)[:10])
                print("  extra:  ", sorted(got - expected[path])[:10])
    print(f"{len(rel) - bad}/{len(rel)} files identical")
    return 1 if bad else 0


if __name__ == "__main__":
    raise SystemExit(main())
