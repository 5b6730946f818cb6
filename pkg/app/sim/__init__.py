from app.sim.episode import EpisodeLog, EpisodeRunner, FailureRecord, StepRecord, load_episode_csv, run_episode
from app.sim.laps import LapDetector, StartLine, detect_lap, segment_crosses
from app.sim.sweep import SweepRow, speed_sweep, sweep_episode_config, write_sweep_csv

__all__ = [
    "EpisodeLog",
    "EpisodeRunner",
    "FailureRecord",
    "LapDetector",
    "StartLine",
    "StepRecord",
    "SweepRow",
    "detect_lap",
    "load_episode_csv",
    "run_episode",
    "segment_crosses",
    "speed_sweep",
    "sweep_episode_config",
    "write_sweep_csv",
]
