from .campaign import (
    CampaignReport,
    CrashRecord,
    TrialContext,
    TrialResult,
    dry_run,
    fuzz_one,
    run_campaign,
    run_trial,
)
from .config import CampaignConfig, ConfigError, load_config, load_seeds, parse_config
from .coverage import CoverageMap, bucket, is_interesting
from .mutate import OPS, apply_op, mutate
