"""Command line front end.

Exit codes: 0 on success, 1 for usage problems, 2 for data problems
(unreadable corpora, bad knowledge bases, failed queries).  Query output
is the same JSON the HTTP service returns, byte for byte.
"""

from __future__ import annotations

import argparse
import datetime
import json
import os
import re
import sys
from urllib.parse import unquote

from .aggregate import ContractError
from .corpus import CorpusError
from .kb import KbError, MineConfig, load, mine, save
from .service import (DEFAULT_THRESHOLD, QueryFault, QueryService,
                      create_app, load_stoplist)
from .synth import SynthSpecError, default_spec, generate_corpus
from .tclang import TcError
from .vsm import DEFAULT_TOP_K

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

KB_ENV_VAR = "ACTMINE_KB"


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for data errors here
    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def terms_from_args(args: list[str]) -> list[str]:
    """Each argument may pack several terms with '+' or whitespace;
    %20 embeds a space inside a single term."""
    out = []
    for arg in args:
        for piece in re.split(r"[+\s]+", arg):
            term = unquote(piece).strip()
            if term:
                out.append(term)
    return out


def _dump(payload: dict) -> str:
    # mirrors fastapi's JSONResponse rendering
    return json.dumps(payload, ensure_ascii=False, allow_nan=False,
                      indent=None, separators=(",", ":"))


def _require_kb(args) -> str:
    if args.kb:
        return args.kb
    env = os.environ.get(KB_ENV_VAR)
    if env:
        return env
    raise SystemExit(_usage_error(
        f"no knowledge base given: pass --kb or set {KB_ENV_VAR}"))


def _usage_error(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return EXIT_USAGE


def _cmd_mine(args) -> int:
    cfg = MineConfig(span=args.span, k=args.k, min_count=args.min_count,
                     shards=args.shards, workers=args.workers,
                     built_at=datetime.datetime.now(datetime.timezone.utc)
                     .isoformat(timespec="seconds"))
    kb = mine(args.corpus, cfg)
    save(kb, args.out)
    print(f"mined {kb.meta.corpus_size} tokens from {kb.meta.total_docs} "
          f"documents into {args.out}")
    print(f"  activities: {len(kb.activity_freq.counts)}  "
          f"objects: {len(kb.object_freq.counts)}  "
          f"pairs: {len(kb.activity_object.values)}"
          f"/{len(kb.object_affordance.values)}"
          f"/{len(kb.activity_activity.values)}")
    return EXIT_OK


def _cmd_query(args) -> int:
    service = QueryService(kb=load(_require_kb(args)))
    terms = terms_from_args(args.terms)
    try:
        payload = service.run(args.mode, terms, target=args.target,
                              top_k=args.top_k, threshold=args.threshold)
    except QueryFault as e:
        print(_dump({"error": {"code": e.code, "message": e.message}}))
        return EXIT_DATA
    print(_dump(payload))
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import HttpVisionClient
    stoplist = load_stoplist(args.stoplist) if args.stoplist else frozenset()
    vision = (HttpVisionClient(args.vision_endpoint)
              if args.vision_endpoint else None)
    app = create_app(kb=load(_require_kb(args)), stoplist=stoplist,
                     vision=vision)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def _cmd_eval_mae(args) -> int:
    from .service import compute_mae
    with open(args.predicted, encoding="utf-8") as fh:
        predicted = json.load(fh)
    with open(args.reference, encoding="utf-8") as fh:
        reference = json.load(fh)
    try:
        value = compute_mae(predicted, reference)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    print(_dump({"mae": value}))
    return EXIT_OK


def _cmd_gen_corpus(args) -> int:
    spec = default_spec(instances=args.instances,
                        noise_ratio=args.noise_ratio, seed=args.seed,
                        files=args.files, span=args.span)
    stats = generate_corpus(spec, args.out)
    print(f"wrote {stats.docs} documents, {stats.tokens} tokens "
          f"({stats.planted_tokens} planted, {stats.noise_tokens} noise) "
          f"across {stats.files} files in {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="actmine",
                     description="Mine activity knowledge from tagged fiction "
                                 "and query it.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("mine", help="mine a corpus into a knowledge base")
    p.add_argument("--corpus", required=True,
                   help="TSV file or directory of TSV files")
    p.add_argument("--out", required=True, help="output knowledge base path")
    p.add_argument("--span", type=int, default=50,
                   help="co-occurrence window in tokens (default 50)")
    p.add_argument("--k", type=float, default=10.0,
                   help="MI smoothing constant (default 10)")
    p.add_argument("--min-count", type=int, default=2,
                   help="drop labels and pairs rarer than this (default 2)")
    p.add_argument("--shards", type=int, default=1,
                   help="split input files into this many shards")
    p.add_argument("--workers", type=int, default=1,
                   help="process shards with this many workers")
    p.set_defaults(fn=_cmd_mine)

    p = sub.add_parser("query", help="query a knowledge base")
    p.add_argument("--kb", default=None,
                   help=f"knowledge base path (default ${KB_ENV_VAR})")
    p.add_argument("mode", choices=sorted(("detect", "affordance", "predict")),
                   help="which model to query")
    p.add_argument("terms", nargs="+",
                   help="query terms; '+' or whitespace separates, "
                        "%%20 embeds a space")
    p.add_argument("--target", default=None,
                   help="score one label instead of ranking")
    p.add_argument("--top-k", type=int, default=DEFAULT_TOP_K)
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD,
                   help="firing threshold for --target (default 0.1)")
    p.set_defaults(fn=_cmd_query)

    p = sub.add_parser("serve", help="serve a knowledge base over HTTP")
    p.add_argument("--kb", default=None,
                   help=f"knowledge base path (default ${KB_ENV_VAR})")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--stoplist", default=None,
                   help="file of query terms to ignore, one per line")
    p.add_argument("--vision-endpoint", default=None,
                   help="image labeling service URL for POST /detect")
    p.set_defaults(fn=_cmd_serve)

    p = sub.add_parser("eval-mae",
                       help="mean absolute error between two distributions")
    p.add_argument("--predicted", required=True,
                   help="JSON file: label to percentage")
    p.add_argument("--reference", required=True,
                   help="JSON file: label to percentage")
    p.set_defaults(fn=_cmd_eval_mae)

    p = sub.add_parser("gen-corpus", help="generate a synthetic corpus")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--instances", type=int, default=72,
                   help="instances per planted template (default 72)")
    p.add_argument("--noise-ratio", type=float, default=10.0,
                   help="noise tokens per planted token (default 10)")
    p.add_argument("--seed", type=int, default=20210)
    p.add_argument("--files", type=int, default=16)
    p.add_argument("--span", type=int, default=50)
    p.set_defaults(fn=_cmd_gen_corpus)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "fn", None):
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    try:
        return args.fn(args)
    except SystemExit as e:
        code = e.code
        return code if isinstance(code, int) else EXIT_USAGE
    except (CorpusError, TcError, KbError, SynthSpecError, ContractError,
            json.JSONDecodeError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
