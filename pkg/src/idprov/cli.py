"""Command-line interface: ``idprov <command> ...``.

Exit status is 0 on success, 1 for a valid but negative result (no
candidates, origin not found, bad golden-set lines) and 2 for usage or
environment errors.  The index directory comes from ``--index`` or the
``IDPROV_INDEX`` environment variable.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import secrets
import sys
import tempfile
from collections.abc import Sequence
from pathlib import Path

from . import __version__
from .corpus import (
    DEFAULT_MAX_RELEASES,
    Namespace,
    apply_scores,
    ingest_directory,
    ingest_manifest,
    load_scores,
    manifest_lines,
    read_release,
)
from .errors import IdprovError, InsufficientIdentifiers, ParseError, TruthMissing
from .extract import decode_source, extract_code_identifiers, is_python_path
from .index import (
    DEFAULT_BLOCKLIST_SIZE,
    Blocklist,
    InvertedIndex,
    build_blocklist,
    build_index,
    frequency_distribution,
    instance_distribution,
    kind_overlap,
    load,
    save,
)
from .sample import Strategy
from .search import (
    IdentifyConfig,
    containment_verifier,
    evaluate,
    identify,
    match,
    rank,
)

log = logging.getLogger("idprov")

EXIT_OK, EXIT_NEGATIVE, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    """Bad invocation or unusable environment; exits with status 2."""


def _write_output(target: str | None, text: str) -> None:
    """Write ``text`` to ``target`` via temp-then-rename, or to stdout."""
    if target in (None, "-"):
        sys.stdout.write(text)
        return
    path = Path(target)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _index_dir(args: argparse.Namespace) -> Path:
    value = args.index or os.environ.get("IDPROV_INDEX")
    if not value:
        raise UsageError("no index directory: pass --index or set IDPROV_INDEX")
    return Path(value)


def _load_index(args: argparse.Namespace) -> InvertedIndex:
    path = _index_dir(args)
    if not path.is_dir():
        raise UsageError(f"index directory not found: {path}")
    return load(path)


def _seed(args: argparse.Namespace) -> int:
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise UsageError("--seed must be a 64-bit unsigned integer")
        return args.seed
    if args.strict:
        raise UsageError("--strict requires an explicit --seed")
    seed = secrets.randbits(64)
    print(f"idprov: using seed {seed}", file=sys.stderr)
    return seed


def _blocklist(index: InvertedIndex, K: int) -> Blocklist:
    """The code blocklist of size ``K``, reusing the one saved with the index."""
    stored = index.blocklists.get(Namespace.CODE)
    if stored is not None and len(stored) == min(K, index.distinct()):
        return Blocklist(Namespace.CODE, stored, K)
    return build_blocklist(index, Namespace.CODE, K)


def _identify_config(args: argparse.Namespace, index: InvertedIndex) -> IdentifyConfig:
    return IdentifyConfig(
        N=args.N, trials=args.trials, strategy=Strategy(args.strategy),
        blocklist=_blocklist(index, args.blocklist_size).entries, seed=_seed(args),
    )


# --- commands -------------------------------------------------------------------


def cmd_build(args: argparse.Namespace) -> int:
    if args.corpus:
        root = Path(args.corpus)
        if not root.is_dir():
            raise UsageError(f"corpus root not found: {root}")
        products = ingest_directory(root, args.max_releases)
    else:
        path = Path(args.manifest)
        if not path.is_file():
            raise UsageError(f"manifest not found: {path}")
        with open(path, encoding="utf-8") as fh:
            products = ingest_manifest(fh, args.max_releases)
    if args.scores:
        with open(args.scores, encoding="utf-8") as fh:
            products = apply_scores(products, load_scores(fh))
    index = build_index(products)
    blocklists = [build_blocklist(index, ns, args.blocklist_size) for ns in Namespace]
    save(index, args.out, blocklists)
    print(f"products\t{index.total_products}")
    for ns in Namespace:
        print(f"{ns.value}\t{index.distinct(ns)}")
    return EXIT_OK


def cmd_stats(args: argparse.Namespace) -> int:
    index = _load_index(args)
    ns = Namespace(args.namespace)
    if args.kind_overlap:
        count, share = kind_overlap(index)
        print("both\tproportion")
        print(f"{count}\t{100 * share:.2f}")
        return EXIT_OK
    if args.instances:
        print("f\tidentifiers\tinstances\tproportion\tcumulative")
        for r in instance_distribution(index, ns):
            print(f"{r.label}\t{r.identifiers}\t{r.instances}\t"
                  f"{r.proportion:.2f}\t{r.cumulative:.2f}")
    else:
        print("f\tidentifiers\tproportion\tcumulative")
        for r in frequency_distribution(index, ns):
            print(f"{r.label}\t{r.identifiers}\t{r.proportion:.2f}\t{r.cumulative:.2f}")
    return EXIT_OK


def _fmt_score(score: float | None) -> str:
    return "" if score is None else f"{score:g}"


def cmd_query(args: argparse.Namespace) -> int:
    index = _load_index(args)
    ranked = rank(index, match(index, args.names))
    for i, (_, name, score) in enumerate(ranked.entries, 1):
        print(f"{i}\t{name}\t{_fmt_score(score)}")
    return EXIT_OK if ranked.entries else EXIT_NEGATIVE


def cmd_identify(args: argparse.Namespace) -> int:
    subject = Path(args.subject)
    if not subject.is_dir():
        raise UsageError(f"subject directory not found: {subject}")
    release = read_release(subject)
    if not release.files:
        raise UsageError(f"no .py files under {subject}")
    index = _load_index(args)
    cfg = _identify_config(args, index)
    result = identify(release, index, cfg, containment_verifier(args.tau))
    if args.report:
        doc = {
            "seed": cfg.seed,
            "found": index.names[result.product] if result.found else None,
            "trial": result.trial,
            "trials": [t.to_json(index) for t in result.trials],
        }
        _write_output(args.report, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    if result.found:
        print(f"{index.names[result.product]}\t{result.trial}")
        return EXIT_OK
    if all(t.error for t in result.trials):
        raise InsufficientIdentifiers(result.trials[0].error)
    return EXIT_NEGATIVE


def _read_golden(path: Path) -> list[tuple[Path, str]]:
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            if not raw.strip():
                continue
            try:
                rec = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", lineno) from None
            if not isinstance(rec, dict):
                raise ParseError("expected a JSON object", lineno)
            subject, truth = rec.get("subject_dir"), rec.get("truth")
            if not isinstance(subject, str) or not isinstance(truth, str):
                raise ParseError("need string fields subject_dir and truth", lineno)
            # Relative subject paths are taken from the golden file's folder.
            pairs.append((path.parent / subject, truth))
    return pairs


def cmd_evaluate(args: argparse.Namespace) -> int:
    golden_path = Path(args.golden)
    if not golden_path.is_file():
        raise UsageError(f"golden set not found: {golden_path}")
    try:
        pairs = _read_golden(golden_path)
    except ParseError as exc:
        print(f"idprov: {golden_path}: {exc}", file=sys.stderr)
        return EXIT_NEGATIVE
    index = _load_index(args)
    cfg = _identify_config(args, index)
    golden = []
    for subject, truth in pairs:
        if not subject.is_dir():
            raise UsageError(f"subject directory not found: {subject}")
        golden.append((read_release(subject), truth))
    try:
        report = evaluate(golden, index, cfg)
    except TruthMissing as exc:
        for name in exc.args[0]:
            print(f"idprov: truth not in index: {name}", file=sys.stderr)
        return EXIT_NEGATIVE
    _write_output(args.out, report.to_tsv())
    if args.json:
        _write_output(args.json, report.to_json())
    return EXIT_OK


def cmd_extract(args: argparse.Namespace) -> int:
    records = []
    for target in map(Path, args.paths):
        if target.is_dir():
            files = [
                p for p in sorted(target.rglob("*"))
                if p.is_file() and is_python_path(p.name)
            ]
            pairs = [(p, p.relative_to(target).as_posix()) for p in files]
        elif target.is_file():
            pairs = [(target, target.as_posix())]
        else:
            raise UsageError(f"no such file or directory: {target}")
        for full, rel in pairs:
            for ident in sorted(extract_code_identifiers(decode_source(full.read_bytes()))):
                records.append({"path": rel, "name": ident.name, "kind": ident.kind.value})
    _write_output(args.out, "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in records))
    return EXIT_OK


def cmd_export(args: argparse.Namespace) -> int:
    root = Path(args.corpus)
    if not root.is_dir():
        raise UsageError(f"corpus root not found: {root}")
    lines = manifest_lines(ingest_directory(root, args.max_releases))
    _write_output(args.out, "".join(line + "\n" for line in lines))
    return EXIT_OK


# --- argument parsing -----------------------------------------------------------


def _non_negative(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return value


def _unit(text: str) -> float:
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError("must lie in [0, 1]")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="idprov", description="Identify the origin of Python code from its identifiers."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    index_opt = argparse.ArgumentParser(add_help=False)
    index_opt.add_argument("--index", "-i", help="index directory (default: $IDPROV_INDEX)")

    sampling = argparse.ArgumentParser(add_help=False)
    sampling.add_argument("--seed", type=int, help="64-bit seed (default: random)")
    sampling.add_argument("--strict", action="store_true", help="refuse to run without --seed")
    sampling.add_argument("-N", "--fingerprint-size", dest="N", type=_positive, default=3)
    sampling.add_argument("--trials", type=_positive, default=5)
    sampling.add_argument("--strategy", choices=[s.value for s in Strategy],
                          default=Strategy.SINGLE_FILE.value)
    sampling.add_argument("-K", "--blocklist-size", dest="blocklist_size",
                          type=_non_negative, default=DEFAULT_BLOCKLIST_SIZE)

    p = sub.add_parser("build", help="index a corpus")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--corpus", help="directory laid out as <product>/<release>/...")
    src.add_argument("--manifest", help="JSON Lines of pre-extracted identifiers")
    p.add_argument("--out", "-o", required=True, help="index directory to write")
    p.add_argument("--max-releases", type=_positive, default=DEFAULT_MAX_RELEASES)
    p.add_argument("--scores", help="TSV of product<TAB>popularity score")
    p.add_argument("-K", "--blocklist-size", dest="blocklist_size",
                   type=_non_negative, default=DEFAULT_BLOCKLIST_SIZE)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("stats", parents=[index_opt], help="frequency distribution tables")
    p.add_argument("--namespace", choices=[ns.value for ns in Namespace], default="code")
    p.add_argument("--instances", action="store_true", help="weight names by frequency")
    p.add_argument("--kind-overlap", action="store_true",
                   help="count names declared both as class and function")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("query", parents=[index_opt], help="rank products defining all names")
    p.add_argument("names", nargs="+")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("identify", parents=[index_opt, sampling], help="find a subject's origin")
    p.add_argument("subject", help="directory holding the subject's source files")
    p.add_argument("--tau", type=_unit, default=0.5, help="verifier containment threshold")
    p.add_argument("--report", help="write per-trial JSON here ('-' for stdout)")
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("evaluate", parents=[index_opt, sampling], help="recall/precision at k")
    p.add_argument("golden", help='JSON Lines of {"subject_dir": ..., "truth": ...}')
    p.add_argument("--out", "-o", help="TSV report path (default: stdout)")
    p.add_argument("--json", help="also write the report as JSON here")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("extract", help="print declared identifiers as JSON Lines")
    p.add_argument("paths", nargs="+")
    p.add_argument("--out", "-o")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("export", help="write a corpus directory as a manifest")
    p.add_argument("--corpus", required=True)
    p.add_argument("--max-releases", type=_positive, default=DEFAULT_MAX_RELEASES)
    p.add_argument("--out", "-o")
    p.set_defaults(func=cmd_export)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="idprov: %(message)s",
    )
    try:
        return args.func(args)
    except (UsageError, IdprovError, OSError) as exc:
        print(f"idprov: {exc}", file=sys.stderr)
        return EXIT_USAGE
