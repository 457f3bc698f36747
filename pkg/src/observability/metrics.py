from opentelemetry.metrics import Meter
from typing import Dict, Any, Optional
import logging

from .otel_config import get_meter

logger = logging.getLogger(__name__)


class MetricsCollector:
    """Collects pipeline metrics"""

    def __init__(self, meter: Meter):
        self.meter = meter

        self.images_counter = meter.create_counter(
            name="images_extracted_total",
            description="Images whose BSIF features were extracted",
            unit="1"
        )

        self.extraction_failure_counter = meter.create_counter(
            name="extraction_failures_total",
            description="Images skipped because they could not be read or filtered",
            unit="1"
        )

        self.models_counter = meter.create_counter(
            name="models_trained_total",
            description="Per-scale SVM models trained",
            unit="1"
        )

        self.tie_draw_counter = meter.create_counter(
            name="tie_draws_total",
            description="Majority votes decided by the seeded tie-break",
            unit="1"
        )

        self.smo_iterations = meter.create_histogram(
            name="smo_iterations",
            description="Pair updates needed by one SMO solve",
            unit="1"
        )

        self.stage_duration = meter.create_histogram(
            name="stage_duration_seconds",
            description="Pipeline stage duration in seconds",
            unit="s"
        )

    def record_images(self, count: int, attributes: Dict[str, Any] = None):
        self.images_counter.add(count, attributes=attributes or {})

    def record_extraction_failure(self, attributes: Dict[str, Any] = None):
        self.extraction_failure_counter.add(1, attributes=attributes or {})

    def record_models(self, count: int, attributes: Dict[str, Any] = None):
        self.models_counter.add(count, attributes=attributes or {})

    def record_tie_draws(self, count: int, attributes: Dict[str, Any] = None):
        if count:
            self.tie_draw_counter.add(count, attributes=attributes or {})

    def record_smo_iterations(self, iterations: int, attributes: Dict[str, Any] = None):
        self.smo_iterations.record(iterations, attributes=attributes or {})

    def record_duration(self, duration: float, attributes: Dict[str, Any] = None):
        """Record stage duration"""
        self.stage_duration.record(duration, attributes=attributes or {})


# Global instance
_metrics: Optional[MetricsCollector] = None


def get_metrics() -> MetricsCollector:
    """Get or create the process-wide collector"""
    global _metrics
    if _metrics is None:
        _metrics = MetricsCollector(get_meter("tcl-detection"))
    return _metrics
