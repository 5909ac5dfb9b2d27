"""Run the recommendation service.

Usage:
    python scripts/run_service.py [--config config.json] [--seed-default]

--seed-default points the first boot at the packaged starter corpus (a dozen
practices plus a small rule set) when no snapshot exists yet.  All other
settings come from the config file and TEACHREC_* environment overrides.
"""

from __future__ import annotations

import argparse
from dataclasses import replace
from importlib import resources

import uvicorn

from teachrec.api import bootstrap, create_app
from teachrec.config import load_config


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", default=None, help="JSON config file")
    parser.add_argument(
        "--seed-default",
        action="store_true",
        help="seed a fresh snapshot from the packaged starter corpus",
    )
    args = parser.parse_args()

    config = load_config(args.config)
    if args.seed_default and config.seed_path is None:
        seed = resources.files("teachrec.data").joinpath("seed_bank.json")
        with resources.as_file(seed) as seed_path:
            config = replace(config, seed_path=seed_path)
            state = bootstrap(config)
    else:
        state = bootstrap(config)

    try:
        uvicorn.run(create_app(state), host=config.host, port=config.port)
    finally:
        state.close()


if __name__ == "__main__":
    main()
