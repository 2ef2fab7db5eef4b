#!/usr/bin/env python3
"""
Serve the wcause HTTP API with uvicorn.

    PORT=18765 HOST=127.0.0.1 python run_web.py

W_WORKERS and W_RESOURCE_CAP apply to the jobs the server runs, as they do
on the command line.
"""

import logging
import os
import sys
from pathlib import Path

# the backend and src packages live next to this script
sys.path.insert(0, str(Path(__file__).resolve().parent))

logger = logging.getLogger("wcause.web")

DEFAULT_PORT = 18765


def server_options() -> dict:
    """uvicorn keyword arguments from PORT, HOST, RELOAD and LOG_LEVEL."""
    return {
        "host": os.environ.get("HOST", "127.0.0.1"),
        "port": int(os.environ.get("PORT", str(DEFAULT_PORT))),
        "reload": os.environ.get("RELOAD", "0") == "1",
        "log_level": os.environ.get("LOG_LEVEL", "info"),
    }


def main():
    import uvicorn

    options = server_options()
    logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
    logger.info(f"wcause API on http://{options['host']}:{options['port']}/docs")
    uvicorn.run("backend.main:app", **options)


if __name__ == "__main__":
    main()
