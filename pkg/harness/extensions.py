import logging
import pathlib

from flask import Config
from sqlalchemy import create_engine
from sqlalchemy.orm import Session

from ensemblekss.backend import ResultBackend
from ensemblekss.backend.csv_backend import CsvBackend
from ensemblekss.backend.db_backend import DBBackend
from ensemblekss.db import Base

ROOT_PATH = pathlib.Path(__file__).resolve().parent.parent
DEFAULT_CONFIG_PATH = ROOT_PATH / "config.py"


def load_config(path=None):
    """The root config.py, with the UPPERCASE names of `path` (if given) on top.

    A settings file that does not exist raises OSError.
    """
    config = Config(ROOT_PATH)
    config.from_pyfile(DEFAULT_CONFIG_PATH)
    if path:
        config.from_pyfile(pathlib.Path(path).resolve())
    return config


def configure_logging(level):
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def make_session(database_uri):
    engine = create_engine(database_uri)
    return Session(engine)


def create_tables(database_uri):
    engine = create_engine(database_uri)
    Base.metadata.create_all(engine)


def get_backend(config, output_dir=None) -> ResultBackend:
    if config["BACKEND"] == "db":
        return DBBackend(make_session(config["SQLALCHEMY_DATABASE_URI"]))
    elif config["BACKEND"] == "csv":
        return CsvBackend(output_dir or config["OUTPUT_DIR"])
    raise ValueError("CONFIG_BACKEND must be 'csv' or 'db'")
