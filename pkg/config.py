import os

from dotenv import load_dotenv

load_dotenv()

# Where experiment results go: tidy CSV files in OUTPUT_DIR, or rows in a database
BACKEND = os.getenv("CONFIG_BACKEND", "csv")
if BACKEND not in ["csv", "db"]:
    raise ValueError("CONFIG_BACKEND must be 'csv' or 'db'")

SQLALCHEMY_DATABASE_URI = os.getenv("CONFIG_SQLALCHEMY_DATABASE_URI", "sqlite:///ekss-results.db")
# "postgresql+psycopg2://postgres:example@db/ekss"

OUTPUT_DIR = os.getenv("CONFIG_OUTPUT_DIR", "results")

# Workers for ensemble members and experiment trials
N_JOBS = int(os.getenv("CONFIG_N_JOBS", "1"))

LOG_LEVEL = os.getenv("CONFIG_LOG_LEVEL", "INFO")
