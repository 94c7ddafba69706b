import argparse
import sys

from pydantic import ValidationError

from app.cli import EXIT_CONFIG_ERROR, data, experiments, reports
from app.config.logging import configure_logging, setup_logger
from app.exceptions import ConfigurationError, DatasetFormatError, LabError

logger = setup_logger(__name__)

# yapılandırma hataları 1 ile çıkar
CONFIG_ERRORS = (ValidationError, ConfigurationError, DatasetFormatError, FileNotFoundError, ValueError)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="deni-lab", description="İnce ayar kararsızlığı azaltma laboratuvarı")
    parser.add_argument("--log-level", help="DEBUG, INFO, WARNING ...")
    subparsers = parser.add_subparsers(dest="command", required=True)
    experiments.register(subparsers)
    reports.register(subparsers)
    data.register(subparsers)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        return args.handler(args)
    except CONFIG_ERRORS as e:
        logger.error(f"Yapılandırma hatası: {str(e)}")
        return EXIT_CONFIG_ERROR
    except LabError as e:
        logger.error(f"Çalıştırma hatası: {str(e)}")
        return EXIT_CONFIG_ERROR


if __name__ == "__main__":
    sys.exit(main())
