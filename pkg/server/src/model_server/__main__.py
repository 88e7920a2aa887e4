"""CLI entry point: `model-server --config server.json` or quick flags for
the built-in models."""

from __future__ import annotations

import argparse
import json
import sys

from .service import serve


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="model-server", description=__doc__)
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8800)
    parser.add_argument("--echo-logits", type=float, nargs="+", default=None,
                        help="serve an echo model with these logits")
    args = parser.parse_args(argv)

    if args.config:
        with open(args.config) as fh:
            config = json.load(fh)
    elif args.echo_logits:
        config = {
            "host": args.host,
            "port": args.port,
            "model": {"type": "echo", "logits": args.echo_logits},
        }
    else:
        parser.error("need --config or --echo-logits")
    serve(config)
    return 0


if __name__ == "__main__":
    sys.exit(main())
