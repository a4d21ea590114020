"""Command-line entry points: train one variable, serve trained artifacts."""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

from .errors import ModelServiceError
from .model import EncoderConfig, TrainedModel
from .serve import VARIABLES, serve
from .train import train


def cmd_train(args: argparse.Namespace) -> int:
    encoder = EncoderConfig()
    if args.encoder_config:
        with open(args.encoder_config, encoding="utf-8") as f:
            encoder = EncoderConfig.from_dict(json.load(f))
    model = train(
        variable=args.variable,
        training_file=args.data,
        epochs=args.epochs,
        seed=args.seed,
        encoder=encoder,
    )
    model.save(args.out)
    print(json.dumps({"variable": model.variable, "labels": len(model.labels),
                      **model.metadata}, sort_keys=True))
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    models = {}
    for name in VARIABLES:
        directory = os.path.join(args.models, name)
        if os.path.isdir(directory):
            models[name] = TrainedModel.load(directory)
    if not models:
        print(f"no model artifacts under {args.models}", file=sys.stderr)
        return 2
    server = serve(models, args.port)
    print(f"serving {sorted(models)} on port {server.server_port}")
    try:
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        server.shutdown()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="model-service")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="fine-tune one variable's classifier")
    p_train.add_argument("--variable", required=True, choices=VARIABLES)
    p_train.add_argument("--data", required=True)
    p_train.add_argument("--out", required=True)
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--epochs", type=int, default=3)
    p_train.add_argument("--encoder-config", default=None)
    p_train.set_defaults(func=cmd_train)

    p_serve = sub.add_parser("serve", help="serve /classify for trained artifacts")
    p_serve.add_argument("--models", required=True,
                         help="directory holding one artifact subdirectory per variable")
    p_serve.add_argument("--port", type=int, default=8300)
    p_serve.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ModelServiceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
