#!/usr/bin/env python3
"""
Record replay fixtures for the bundled AR APC example.

Runs all four stages live against the configured endpoint on the violating
example model and stores every raw answer under its prompt hash: one per
constraint and one for the interpretation. Review the recorded Turtle before
committing it; the prompts in prompts.py are part of the hash, so edit them
first and record afterwards.

    OPENAI_API_KEY=... python record_llm_fixtures.py [fixtures_dir]
"""

import logging
import sys
import tempfile
from pathlib import Path

from llm_bridge import LlmMode
from main import EXIT_ERROR, RunConfig, run
from settings import load_settings

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

FIXTURES = Path(__file__).parent / "fixtures"
DEFAULT_TARGET = FIXTURES / "llm" / "replay"


def record(target: Path) -> int:
    settings = load_settings(llm_mode=LlmMode.LIVE.value, fixtures_dir=target)
    before = {path.name for path in target.glob("*.txt")}

    with tempfile.TemporaryDirectory() as out_dir:
        config = RunConfig(
            aml_file=FIXTURES / "aml" / "fig2_violating.aml",
            ar_files=[FIXTURES / "aml" / "ar_apc_libraries.aml"],
            constraints_file=FIXTURES / "constraints" / "ar_apc_rules.txt",
            out_dir=Path(out_dir),
            mapping=settings.mapping_config(),
            llm=settings.llm_config(),
        )
        code = run(config)
        log = Path(out_dir) / "exchanges.log"
        if log.is_file():
            print(log.read_text(encoding="utf-8"), end="")

    if code == EXIT_ERROR:
        logger.error("Recording failed; see the log above")
        return code
    added = sorted({path.name for path in target.glob("*.txt")} - before)
    print(f"{len(added)} new fixture(s) in {target}: {', '.join(added) or 'none'}")
    return 0


if __name__ == "__main__":
    destination = Path(sys.argv[1]) if len(sys.argv) > 1 else DEFAULT_TARGET
    sys.exit(record(destination))
