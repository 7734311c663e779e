"""nearbysense: banded proximity-service simulation, spoofed-origin probe
campaigns, OCR-text ingestion, ethnicity/language labeling, business
censusing, and the migration metrics computed from them.
"""

from .errors import (
    ConfigError,
    DegenerateDataError,
    InconsistentObservationsError,
    InvalidInputError,
    NearbySenseError,
    PlacesClientError,
    TransportError,
    UndefinedFitError,
)
from .geo import (
    DistanceBand,
    FeasibleRegion,
    GeoPoint,
    band_interval,
    geodesic_distance,
    localize_from_bands,
    quantize_band,
)
from .population import (
    Population,
    PopulationSpec,
    SyntheticUser,
    generate_population,
    load_population,
    save_population,
)
from .simulator import QueryEntry, QueryResult, nearby_query, page_results
from .snapshot import (
    ParseResult,
    SnapshotRecord,
    inject_block_noise,
    parse_snapshot_text,
    render_snapshot,
)
from .config import CampaignConfig, CensusConfig, CityConfig, load_campaign_config
from .campaign import (
    CampaignResult,
    ProbeSession,
    ReplayTransport,
    ScheduledProbe,
    SimulatorTransport,
    build_schedule,
    run_campaign,
    run_probe,
)
from .store import ObservationStore, apply_auto_labels, user_key
from .labeling import (
    Label,
    LabelRecord,
    LanguageSpec,
    LanguageUse,
    ScriptProfile,
    auto_label,
    classify_language_use,
    detect_scripts,
    import_annotations,
    language_registry,
    resolve_language,
    vote_labels,
)
from .places import (
    CensusResult,
    MockPlacesClient,
    PlaceRecord,
    QuerySpec,
    build_query_matrix,
    execute_census,
    load_place_dataset,
    save_place_dataset,
)
from .metrics import (
    AssimilationReport,
    ConcentrationReport,
    RegressionFit,
    SummaryStats,
    assimilation_distribution,
    concentration,
    consistency_report,
    proportions,
    regress,
    summary_stats,
)
from .report import CityMetrics, ReportBundle, compute_city_metrics, emit_report

__version__ = "0.1.0"
