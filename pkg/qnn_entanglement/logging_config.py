import logging
import logging.handlers
import os

TRAINING_ACTIVITY_LOGGER = 'training_activity'
MAX_LOG_BYTES = 10 * 1024 * 1024
LOG_BACKUPS = 5


def _rotating_handler(log_dir, filename, level, formatter):
    handler = logging.handlers.RotatingFileHandler(
        os.path.join(log_dir, filename),
        maxBytes=MAX_LOG_BYTES,
        backupCount=LOG_BACKUPS
    )
    handler.setLevel(level)
    handler.setFormatter(formatter)
    return handler


def setup_logging(log_level=logging.INFO, log_dir="logs"):
    """Console plus app.log, errors.log and training_activity.log."""
    os.makedirs(log_dir, exist_ok=True)

    detailed_formatter = logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s'
        ' - %(funcName)s:%(lineno)d - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S')

    simple_formatter = logging.Formatter(
        '%(asctime)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )

    root_logger = logging.getLogger()
    root_logger.setLevel(log_level)
    for handler in list(root_logger.handlers):
        handler.close()
        root_logger.removeHandler(handler)

    console_handler = logging.StreamHandler()
    console_handler.setLevel(log_level)
    console_handler.setFormatter(simple_formatter)
    root_logger.addHandler(console_handler)

    root_logger.addHandler(_rotating_handler(
        log_dir, 'app.log', logging.DEBUG, detailed_formatter))
    root_logger.addHandler(_rotating_handler(
        log_dir, 'errors.log', logging.ERROR, detailed_formatter))

    # Epoch progress only; records still propagate to app.log
    training_logger = logging.getLogger(TRAINING_ACTIVITY_LOGGER)
    for handler in list(training_logger.handlers):
        handler.close()
        training_logger.removeHandler(handler)
    training_logger.addHandler(_rotating_handler(
        log_dir, 'training_activity.log', logging.INFO, detailed_formatter))
    training_logger.setLevel(logging.INFO)

    logging.info(f"Logging system initialized in {log_dir}")

    return root_logger
