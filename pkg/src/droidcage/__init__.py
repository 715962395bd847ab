"""droidcage: a device-free dynamic-analysis sandbox.

Simulated app models are explored by a grey-box engine and a seeded
random baseline while basic-block coverage is measured; all network and
telephony side effects pass through a controlled interception pipeline.
"""

from .app_model import (
    AppModel,
    DeviceState,
    ElementKey,
    Event,
    EventUniverse,
    SideEffect,
    StepResult,
    apply_event,
    dump_hierarchy,
    identify_element,
    install_app,
    load_app_model,
    reachable_blocks,
)
from .coverage import AggregateRow, CoverageReport, aggregate, improvement_ratio, measure
from .explorer import (
    ExplorationConfig,
    TextfieldCategory,
    categorize_textfield,
    cleanup,
    explore,
    generate_fill_value,
)
from .harness import ExperimentConfig, ResultsTable, emit_results, run_experiment
from .monkey import MonkeyConfig, generate_events, run_monkey
from .netguard import (
    HttpTransaction,
    NetGuard,
    Verdict,
    decide,
    intercept_tls,
    parse_log_entry,
    parse_request,
    simulate_response,
    write_log_entry,
)
from .session import Session
from .telephony import TelephonyPolicy, filter_outgoing
from .trace import TraceConfig, TraceEvent, TraceLog, format_java_call, record

__version__ = "0.1.0"
