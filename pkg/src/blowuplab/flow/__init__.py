from .integrate import Box, SectionResult, SectionSpec, Trajectory, integrate, integrate_to_section, with_clock
from .passage import (
    OUTCOMES,
    ItineraryEntry,
    PassageReport,
    SectionParams,
    default_entry,
    entry_radius,
    exit_scaling_fit,
    mode_envelope,
    passage,
    sections,
)
from .consistency import conserved_drift, desingularization_defect
