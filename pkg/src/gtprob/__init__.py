"""Capital processes, witnesses and detectors for continuous-time game-theoretic probability."""
from .paths import NEVER, DomainError, ParseError, Path, first_hit, hitting_time, running_max, value_at
from .trading import (
    CapitalTrace,
    ElementaryStrategy,
    FixedTime,
    HitLevels,
    PortfolioRule,
    Superposition,
    check_positive,
    eval_elementary,
    stop_at_threshold,
    superpose_weighted,
)
from .wlln import GameConfig, ProtocolViolation, capital_bound, play_game, sceptic_stake, wlln_certificate
from .detectors import EventParams, enumerate_events, isolated_point_witness, monotone_witness, run_detector
from .increase import EpsilonSchedule, ScheduleError, decompose_cycles, e_cd_witness
from .upper_prob import Verdict, coherence_check, witness_upper_bound

__version__ = "0.1.0"
