"""structfuzz-mutator command line: serve a backend, or fine-tune on pairs."""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .backend import BackendConfig, ConfigError, load_config_file, make_backend
from .finetune import FinetuneError, finetune_scaffold
from .server import ListenError, MutatorServer

EXIT_OK = 0
EXIT_CONFIG = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="structfuzz-mutator",
        description="mutation server for the structfuzz channel protocol",
    )
    parser.add_argument(
        "--version", action="version", version=f"structfuzz-mutator {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def backend_flags(p):
        p.add_argument("--config", help="key=value backend config file")
        p.add_argument("--backend", choices=("stub", "model"))
        p.add_argument("--model-path")
        p.add_argument("--temperature", type=float)
        p.add_argument("--fp16", choices=("on", "off"))
        p.add_argument("--lora", choices=("on", "off"))
        p.add_argument("--max-input-tokens", type=int)

    serve = sub.add_parser("serve", help="listen for REQ lines and answer them")
    serve.add_argument("--listen", required=True,
                       help="host:port, unix:/path, or a socket path")
    serve.add_argument("--max-requests", type=int,
                       help="answer N requests then exit (testing)")
    backend_flags(serve)

    tune = sub.add_parser("finetune", help="train on an exported pairs.jsonl")
    tune.add_argument("--records", required=True)
    tune.add_argument("--out", required=True)
    tune.add_argument("--steps", type=int, default=20)
    tune.add_argument("--seed", type=int, default=0)
    backend_flags(tune)
    return parser


def backend_config(args) -> BackendConfig:
    values = load_config_file(args.config) if args.config else {}
    flags = {
        "backend": args.backend,
        "model_path": args.model_path,
        "temperature": args.temperature,
        "max_input_tokens": args.max_input_tokens,
        "fp16": {"on": True, "off": False}.get(args.fp16),
        "lora": {"on": True, "off": False}.get(args.lora),
    }
    values.update({k: v for k, v in flags.items() if v is not None})
    cfg = BackendConfig(**values)
    cfg.validate()
    return cfg


def _run_serve(args) -> int:
    cfg = backend_config(args)
    server = MutatorServer(make_backend(cfg), args.listen)
    print(f"listening on {server.endpoint()} backend={cfg.backend}", flush=True)
    try:
        server.serve_forever(max_requests=args.max_requests)
    except KeyboardInterrupt:
        server.shutdown()
    return EXIT_OK


def _run_finetune(args) -> int:
    cfg = backend_config(args)
    report = finetune_scaffold(
        args.records, cfg, args.out, steps=args.steps, seed=args.seed
    )
    for skip in report.skipped:
        print(f"skipped {args.records}:{skip.lineno}: {skip.reason}", file=sys.stderr)
    print(
        f"trained on {report.used_records} records for {report.steps} steps: "
        f"final_loss={report.final_loss:.4f} artifact={report.artifact}"
    )
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "serve":
            return _run_serve(args)
        return _run_finetune(args)
    except (ConfigError, ListenError, FinetuneError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
