"""contextema: context-aware mobile sensing and EMA intervention engine.

Sensing inference (places, conversations, social context), a context-triggered
EMA scripting engine with therapist-in-the-loop message selection, an
event-sourced sync service with an HTTP API, a metrics suite, and a
deterministic participant simulator.
"""

from .config import EngineConfig
from .context import (
    CompanyState,
    ConfirmAnswer,
    ContextResolution,
    LocationState,
    SocialContext,
    SocialContextWindow,
    classify_window,
    reconcile,
)
from .conversations import (
    ConversationDetector,
    ConversationEpisode,
    DutyCycle,
    detect_episodes,
    detect_speech,
    duty_cycle_windows,
    segment_conversations,
)
from .engine import Engine
from .ema import (
    DailySchedule,
    EmaKind,
    EmaScript,
    EmaSession,
    ScriptBank,
    SessionState,
    advance,
    build_contextual_script,
    build_direct_ask_script,
    schedule_day,
)
from .engagement import EngagementBook, GoalLevel
from .messages import Message, MessageBank, MessageCategory, category_for_context
from .metrics import (
    adherence,
    burst_summary,
    coverage,
    detection_accuracy,
    message_mix,
    weekly_aggregate,
)
from .places import (
    HomeAwayInterval,
    HomeAwayState,
    Place,
    PlaceClusterer,
    PlaceModel,
    build_place_model,
    cluster_places,
    haversine_m,
    home_away_timeline,
    label_home,
)
from .records import (
    AudioFrame,
    LocationSample,
    SensorRecord,
    parse_trace,
    serialize_trace,
    slice_records,
)
from .server import serve_api

__version__ = "0.1.0"

__all__ = [
    "EngineConfig",
    "Engine",
    "serve_api",
    # records
    "SensorRecord",
    "LocationSample",
    "AudioFrame",
    "parse_trace",
    "serialize_trace",
    "slice_records",
    # places
    "Place",
    "PlaceModel",
    "PlaceClusterer",
    "HomeAwayInterval",
    "HomeAwayState",
    "cluster_places",
    "label_home",
    "build_place_model",
    "home_away_timeline",
    "haversine_m",
    # conversations
    "DutyCycle",
    "ConversationDetector",
    "ConversationEpisode",
    "duty_cycle_windows",
    "detect_speech",
    "segment_conversations",
    "detect_episodes",
    # context
    "SocialContext",
    "SocialContextWindow",
    "ContextResolution",
    "LocationState",
    "CompanyState",
    "ConfirmAnswer",
    "classify_window",
    "reconcile",
    # ema
    "DailySchedule",
    "EmaKind",
    "EmaScript",
    "EmaSession",
    "ScriptBank",
    "SessionState",
    "schedule_day",
    "build_contextual_script",
    "build_direct_ask_script",
    "advance",
    # messages
    "Message",
    "MessageBank",
    "MessageCategory",
    "category_for_context",
    # engagement
    "EngagementBook",
    "GoalLevel",
    # metrics
    "adherence",
    "detection_accuracy",
    "coverage",
    "weekly_aggregate",
    "burst_summary",
    "message_mix",
]
