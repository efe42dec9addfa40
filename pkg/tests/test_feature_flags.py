from unittest.mock import MagicMock

from core.feature_flags import (
    FLAGSMITH_KEY_VARIABLE,
    FRONT_GUARD_FLAG,
    VISUALIZER_FLAG,
    FeatureFlagManager,
    FlagsmithProvider,
    LocalFlagProvider,
)


def test_local_flags(monkeypatch):
    monkeypatch.delenv(FLAGSMITH_KEY_VARIABLE, raising=False)
    manager = FeatureFlagManager.from_config({FRONT_GUARD_FLAG: True, VISUALIZER_FLAG: False})

    assert isinstance(manager.provider, LocalFlagProvider), "Without a key the local provider is used"
    assert manager.is_enabled(FRONT_GUARD_FLAG), "Enabled flag reported as disabled"
    assert not manager.is_enabled(VISUALIZER_FLAG), "Disabled flag reported as enabled"
    assert not manager.is_enabled("enable-unknown"), "Unknown flags are disabled"


def test_flagsmith_is_used_when_key_is_set(monkeypatch):
    """Test that the environment key switches flag lookups to Flagsmith.

    Steps:
        1. Replace the Flagsmith client class with a mock.
        2. Set the environment key and build the manager.
        3. Check that flag lookups go through the client.
    """
    client = MagicMock()
    client.get_environment_flags.return_value.is_feature_enabled.return_value = True
    client.get_environment_flags.return_value.get_feature_value.return_value = "on"
    monkeypatch.setattr("core.feature_flags.flagsmith.Flagsmith", MagicMock(return_value=client))
    monkeypatch.setenv(FLAGSMITH_KEY_VARIABLE, "test-key")

    manager = FeatureFlagManager.from_config({FRONT_GUARD_FLAG: False})

    assert isinstance(manager.provider, FlagsmithProvider), "The key should select Flagsmith"
    assert manager.is_enabled(FRONT_GUARD_FLAG), "Flagsmith overrides the local default"
    assert manager.get_value(FRONT_GUARD_FLAG) == "on", "Values come from Flagsmith"
    client.get_environment_flags.return_value.is_feature_enabled.assert_called_with(FRONT_GUARD_FLAG)
