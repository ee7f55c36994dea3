"""
Pipeline configuration.

Values come from, highest priority first: command-line flags (passed as
keyword overrides), AMLSHACL_* environment variables, an optional JSON
config file, then the defaults below. The API key itself is never part of
the settings; only the name of the environment variable holding it is.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Type

from pydantic.fields import FieldInfo
from pydantic_settings import BaseSettings, PydanticBaseSettingsSource, SettingsConfigDict

from aml_to_owl import DEFAULT_BASE_IRI, LibNamespacePolicy, MappingConfig
from llm_bridge import DEFAULT_ENDPOINT, DEFAULT_KEY_VARIABLE, DEFAULT_MODEL, LlmClientConfig, LlmMode
from rdf_core import DEFAULT_AML_NAMESPACE

logger = logging.getLogger(__name__)

ENV_PREFIX = "AMLSHACL_"


class JsonFileSettingsSource(PydanticBaseSettingsSource):
    """Settings read from a flat JSON object; unknown keys are ignored"""

    def __init__(self, settings_cls: Type[BaseSettings], path: Optional[Path]):
        super().__init__(settings_cls)
        self.path = path
        self.data: Dict[str, Any] = {}
        if path is not None:
            self.data = json.loads(Path(path).read_text(encoding="utf-8"))
            if not isinstance(self.data, dict):
                raise ValueError(f"Config file {path} must contain a JSON object")
            logger.info(f"Loaded configuration from {path}")

    def get_field_value(self, field: FieldInfo, field_name: str) -> Tuple[Any, str, bool]:
        return self.data.get(field_name), field_name, False

    def __call__(self) -> Dict[str, Any]:
        return {name: self.data[name] for name in self.settings_cls.model_fields if name in self.data}


class PipelineSettings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix=ENV_PREFIX, extra="ignore")

    # mapping
    base_iri: str = DEFAULT_BASE_IRI
    aml_namespace: str = DEFAULT_AML_NAMESPACE
    lib_namespace_policy: LibNamespacePolicy = LibNamespacePolicy.SHARED

    # llm
    llm_mode: LlmMode = LlmMode.LIVE
    endpoint_url: str = DEFAULT_ENDPOINT
    model_name: str = DEFAULT_MODEL
    api_key_env_var: str = DEFAULT_KEY_VARIABLE
    temperature: float = 0.0
    max_retries: int = 2
    timeout: float = 60.0
    fixtures_dir: Optional[Path] = None

    log_level: str = "INFO"

    def mapping_config(self) -> MappingConfig:
        return MappingConfig(
            base_iri=self.base_iri,
            aml_namespace=self.aml_namespace,
            lib_namespace_policy=self.lib_namespace_policy,
        )

    def llm_config(self) -> LlmClientConfig:
        return LlmClientConfig(
            endpoint_url=self.endpoint_url,
            model_name=self.model_name,
            api_key_env_var=self.api_key_env_var,
            temperature=self.temperature,
            max_retries=self.max_retries,
            timeout=self.timeout,
            mode=self.llm_mode,
            fixtures_dir=self.fixtures_dir,
        )


def load_settings(config_file: Optional[Path] = None, **overrides: Any) -> PipelineSettings:
    """Settings with flag overrides (None values are treated as unset)"""

    class _Settings(PipelineSettings):
        @classmethod
        def settings_customise_sources(
            cls,
            settings_cls: Type[BaseSettings],
            init_settings: PydanticBaseSettingsSource,
            env_settings: PydanticBaseSettingsSource,
            dotenv_settings: PydanticBaseSettingsSource,
            file_secret_settings: PydanticBaseSettingsSource,
        ) -> Tuple[PydanticBaseSettingsSource, ...]:
            return init_settings, env_settings, JsonFileSettingsSource(settings_cls, config_file)

    return _Settings(**{key: value for key, value in overrides.items() if value is not None})
