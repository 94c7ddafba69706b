from . import run_repository
