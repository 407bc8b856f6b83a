import os
import json
import logging
from pathlib import Path


# Load config.json
CONFIG_PATH = Path(__file__).resolve().parent.parent / 'config.json'
with open(CONFIG_PATH, 'r') as cfg:
    CONFIG = json.load(cfg)

# Set environment
if ('ENV' in os.environ) and (os.environ['ENV'] == 'DEVELOPMENT'):
    ENV = 'DEVELOPMENT'
else:
    ENV = 'PRODUCTION'

DEBUG_CHECKS = CONFIG['DEBUG_CHECKS'][ENV]
VERSION = CONFIG['VERSION']


def configure_logging(level=None):
    '''
    Configure the root logger from the LOGGING section of the active
    environment. An explicit level (e.g. from the CLI) takes precedence.
    '''

    log_config = CONFIG['LOGGING'][ENV]
    logging.basicConfig(
        level=level or log_config['LEVEL'],
        format=log_config['FORMAT'],
        force=True)
