from pydantic import BaseSettings
from dotenv import load_dotenv
import os

load_dotenv()

class Settings(BaseSettings):
    RESULTS_DIR: str = os.getenv(
        "RESULTS_DIR",
        "results"
    )
    LOG_DIR: str = os.getenv(
        "LOG_DIR",
        "logs"
    )
    LOG_LEVEL: str = os.getenv(
        "LOG_LEVEL",
        "INFO"
    )
    # her koşu dizininde ayrı bir SQLite defteri tutulur
    LEDGER_DB_NAME: str = os.getenv(
        "LEDGER_DB_NAME",
        "ledger.db"
    )
    BACKBONE_FILE: str = os.getenv(
        "BACKBONE_FILE",
        "backbone.bin"
    )
    WORKERS: int = int(os.getenv("WORKERS", "1"))

    class Config:
        env_file = ".env"
        env_file_encoding = "utf-8"
        case_sensitive = True

settings = Settings()
