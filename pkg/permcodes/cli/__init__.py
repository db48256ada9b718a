from .commands import run, build_parser
from .simulation import SimConfig, SimRecord, simulate_erasure, write_records_csv
