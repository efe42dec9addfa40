import pytest

from core.dependency_injector import DependencyInjector


def test_dependency_injection():
    """Test the dependency injection mechanism.

    This function tests the `DependencyInjector` class to ensure that:
    1. Services can be registered correctly.
    2. Registered services can be resolved accurately.

    Raises:
        AssertionError: If the resolved service does not match the registered object.
    """
    injector = DependencyInjector()
    service = object()

    injector.register("test_service", service)
    resolved_service = injector.resolve("test_service")

    assert resolved_service is service, "Failed to correctly resolve dependencies"


def test_factory_runs_once_on_first_resolution():
    calls = []
    injector = DependencyInjector()
    injector.register_factory("model", lambda: calls.append(1) or "loaded")

    assert calls == [], "A factory must not run at registration"
    assert injector.resolve("model") == "loaded" and injector.resolve("model") == "loaded", "Wrong service"
    assert calls == [1], "The factory result must be cached"


def test_registration_errors():
    injector = DependencyInjector()
    injector.register("model", 1)
    with pytest.raises(ValueError):
        injector.register_factory("model", lambda: 2)
    with pytest.raises(ValueError):
        injector.resolve("missing")
