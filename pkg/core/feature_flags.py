import logging
import os
from abc import ABC, abstractmethod
from typing import Any, Dict, Mapping, Optional

import flagsmith

logger = logging.getLogger(__name__)

FRONT_GUARD_FLAG = "enable-front-guard"
VISUALIZER_FLAG = "enable-visualizer"
PARALLEL_GRID_SEARCH_FLAG = "enable-parallel-grid-search"
FLAGSMITH_KEY_VARIABLE = "FLAGSMITH_ENVIRONMENT_KEY"


class FeatureFlagProvider(ABC):
    """Abstract base class for feature flag providers.

    Methods:
        is_feature_enabled(feature_name, user_context): Checks if a feature is enabled.
        get_feature_value(feature_name, user_context): Retrieves the value of a feature flag.
    """

    @abstractmethod
    def is_feature_enabled(self, feature_name: str, user_context: Dict[str, Any] = None) -> bool:
        """Checks if a feature is enabled.

        Args:
            feature_name (str): The name of the feature to check.
            user_context (Dict[str, Any], optional): Additional context. Defaults to None.

        Returns:
            bool: True if the feature is enabled, False otherwise.
        """
        pass

    @abstractmethod
    def get_feature_value(self, feature_name: str, user_context: Dict[str, Any] = None) -> Any:
        """Gets the value of a feature flag.

        Args:
            feature_name (str): The name of the feature to retrieve.
            user_context (Dict[str, Any], optional): Additional context. Defaults to None.

        Returns:
            Any: The value of the feature flag.
        """
        pass


class LocalFlagProvider(FeatureFlagProvider):
    """Feature flags read from the pipeline configuration.

    Unknown flags are disabled.

    Attributes:
        flags (Dict[str, Any]): Flag values keyed by name.
    """

    def __init__(self, flags: Optional[Mapping[str, Any]] = None):
        self.flags = dict(flags or {})

    def is_feature_enabled(self, feature_name: str, user_context: Dict[str, Any] = None) -> bool:
        return bool(self.flags.get(feature_name, False))

    def get_feature_value(self, feature_name: str, user_context: Dict[str, Any] = None) -> Any:
        return self.flags.get(feature_name)


class FlagsmithProvider(FeatureFlagProvider):
    """Feature flag provider backed by the Flagsmith service.

    Attributes:
        client (flagsmith.Flagsmith): The Flagsmith client instance.
    """

    def __init__(self, environment_key: str):
        """Initializes the FlagsmithProvider.

        Args:
            environment_key (str): The environment key for the Flagsmith client.
        """
        self.client = flagsmith.Flagsmith(environment_key=environment_key)

    def is_feature_enabled(self, feature_name: str, user_context: Dict[str, Any] = None) -> bool:
        flags = self.client.get_environment_flags()
        return flags.is_feature_enabled(feature_name)

    def get_feature_value(self, feature_name: str, user_context: Dict[str, Any] = None) -> Any:
        flags = self.client.get_environment_flags()
        return flags.get_feature_value(feature_name)


class FeatureFlagManager:
    """Manages feature flags dynamically through a specified provider.

    Attributes:
        provider (FeatureFlagProvider): The provider used for flag lookups.
    """

    def __init__(self, provider: FeatureFlagProvider):
        """Initializes the FeatureFlagManager.

        Args:
            provider (FeatureFlagProvider): An instance of a feature flag provider.
        """
        self.provider = provider

    @classmethod
    def from_config(cls, flags: Mapping[str, Any]) -> "FeatureFlagManager":
        """Builds a manager from the configuration, preferring Flagsmith when configured.

        Args:
            flags (Mapping[str, Any]): Local flag defaults from the pipeline config.

        Returns:
            FeatureFlagManager: Manager using Flagsmith if the environment key variable is
            set, otherwise the local defaults.
        """
        environment_key = os.environ.get(FLAGSMITH_KEY_VARIABLE)
        if environment_key:
            logger.info("Using Flagsmith feature flags")
            return cls(FlagsmithProvider(environment_key=environment_key))
        return cls(LocalFlagProvider(flags))

    def is_enabled(self, feature_name: str, user_context: Dict[str, Any] = None) -> bool:
        """Checks if a feature is enabled.

        Args:
            feature_name (str): The name of the feature to check.
            user_context (Dict[str, Any], optional): Additional context. Defaults to None.

        Returns:
            bool: True if the feature is enabled, False otherwise.
        """
        enabled = self.provider.is_feature_enabled(feature_name, user_context)
        if not enabled:
            logger.info(f"Feature '{feature_name}' is disabled.")
        return enabled

    def get_value(self, feature_name: str, user_context: Dict[str, Any] = None) -> Any:
        return self.provider.get_feature_value(feature_name, user_context)
