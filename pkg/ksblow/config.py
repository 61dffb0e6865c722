import logging
import os
import platformdirs
from dataclasses import dataclass, field

def default_out_dir() -> str:
    return os.environ.get('KSBLOW_OUT') or f'{platformdirs.user_data_dir()}/ksblow/runs'

@dataclass
class Config:
    strict: bool = True
    log_level: int = logging.INFO
    out_dir: str = field(default_factory=default_out_dir)
    jobs: int = 1

config = Config()
