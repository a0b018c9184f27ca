"""Coverage-guided greybox fuzzer with an asynchronous structure-aware mutation channel."""

__version__ = "0.1.0"

from .channel import (
    BoundedQueue,
    MutationChannel,
    MutationRequest,
    MutationResponse,
)
from .corpus import Corpus, CrashRecord, Seed
from .coverage import CoverageMap, NoveltyVerdict, bucketize, observe
from .dataset import FinetunePair, build_pairs, detect_valuable, export_pairs, import_pairs
from .engine import CampaignConfig, CampaignStats, run_campaign, report_coverage
from .executor import ExecOutcome, ProviderError
from .hexcodec import HexSeed, MalformedHex, decode, encode, gate_length, sanitize_response
from .mutators import MutationPlan, SpliceError, deterministic_pass, havoc, splice

__all__ = [
    "BoundedQueue",
    "CampaignConfig",
    "CampaignStats",
    "Corpus",
    "CoverageMap",
    "CrashRecord",
    "ExecOutcome",
    "FinetunePair",
    "HexSeed",
    "MalformedHex",
    "MutationChannel",
    "MutationPlan",
    "MutationRequest",
    "MutationResponse",
    "NoveltyVerdict",
    "ProviderError",
    "Seed",
    "SpliceError",
    "bucketize",
    "build_pairs",
    "decode",
    "detect_valuable",
    "deterministic_pass",
    "encode",
    "export_pairs",
    "gate_length",
    "havoc",
    "import_pairs",
    "observe",
    "report_coverage",
    "run_campaign",
    "sanitize_response",
    "splice",
]
