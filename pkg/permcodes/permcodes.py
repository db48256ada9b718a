import logging
from logging.handlers import TimedRotatingFileHandler
import os
import sys
from permcodes import cli
from permcodes.cli.constants import ENV_LOG_DIR, ENV_LOG_LEVEL

logger = logging.getLogger('Permcodes')

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


def configure_logging():
    log_dir = os.environ.get(ENV_LOG_DIR) or "logs"
    level = (os.environ.get(ENV_LOG_LEVEL) or "INFO").upper()
    if level not in LOG_LEVELS:
        raise ValueError(f"Please set the environment variable {ENV_LOG_LEVEL} to one of {', '.join(LOG_LEVELS)}")

    if not os.path.exists(log_dir):
        os.makedirs(log_dir)

    logfmt = logging.Formatter(fmt='%(asctime)s [%(levelname)s] %(name)s: %(message)s',
                               datefmt='%Y-%m-%d %I:%M:%S %p')
    handler = TimedRotatingFileHandler(os.path.join(log_dir, "permcodes.log"),
                                       when="D",
                                       interval=1,
                                       backupCount=5)
    handler.setFormatter(logfmt)
    console = logging.StreamHandler(sys.stderr)
    console.setLevel(logging.WARNING)
    console.setFormatter(logging.Formatter(fmt='%(levelname)s: %(message)s'))
    console.addFilter(lambda record: not record.exc_info)

    logging.basicConfig(level=level, handlers=[handler, console])
    logging.getLogger("concurrent.futures").setLevel("WARNING")


def main(argv=None):
    configure_logging()
    logger.info("Starting permcodes")
    status = cli.run(sys.argv[1:] if argv is None else argv)
    logger.info(f"Exiting with status {status}")
    sys.exit(status)


if __name__ == "__main__":
    main()
