from .settings import settings, get_settings
from .pipeline_settings import PipelineSettings

__all__ = ["settings", "get_settings", "PipelineSettings"]
