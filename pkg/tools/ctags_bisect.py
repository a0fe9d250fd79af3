"""Find the shortest prefix of a file on which idprov and ctags disagree.

    python tools/ctags_bisect.py FILE
"""

from __future__ import annotations

import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))
sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

import ctags_oracle  # noqa: E402

from idprov.extract import decode_source, extract_code_identifiers  # noqa: E402

PROBE = "\ndef zzprobe(): pass\nclass Zzprobe: pass\n"


def main() -> int:
    lines = decode_source(Path(sys.argv[1]).read_bytes()).split("\n")
    with tempfile.TemporaryDirectory() as tmp:
        root = Path(tmp)

        def agree(m: int) -> bool:
            text = "\n".join(lines[:m]) + PROBE
            (root / "s.py").write_text(text, encoding="utf-8", errors="surrogateescape")
            want = ctags_oracle.run(root, ["s.py"])["s.py"]
            got = {(i.name, i.kind.value) for i in extract_code_identifiers(text)}
            return want == got

        lo, hi = 0, len(lines)
        if agree(hi):
            print("no disagreement")
            return 0
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if agree(mid):
                lo = mid
            else:
                hi = mid
        print(f"first disagreeing prefix ends at line {hi}")
        for k in range(max(0, hi - 6), hi):
            print(f"{k + 1:5}: {lines[k]}")
    return 1


if __name__ == "__main__":
    raise SystemExit(main())
