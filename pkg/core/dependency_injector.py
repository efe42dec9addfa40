from typing import Any, Callable


class DependencyInjector:
    """A small service container for trained models and shared collaborators.

    Services are registered either as ready instances or as zero-argument factories.
    A factory runs on first resolution and its result is cached, so expensive model
    files are only read when a command actually needs them.
    """

    def __init__(self):
        """Initializes an empty container.

        Attributes:
            _services (dict): Resolved instances keyed by name.
            _factories (dict): Pending factories keyed by name.
        """
        self._services = {}
        self._factories = {}

    def register(self, name: str, service: Any) -> None:
        """Registers a ready instance.

        Args:
            name (str): The unique identifier for the dependency.
            service (Any): The instance to register.

        Raises:
            ValueError: If a service with the given name is already registered.
        """
        self._ensure_free(name)
        self._services[name] = service

    def register_factory(self, name: str, factory: Callable[[], Any]) -> None:
        """Registers a factory that builds the service on first use.

        Args:
            name (str): The unique identifier for the dependency.
            factory (Callable[[], Any]): Zero-argument callable producing the service.

        Raises:
            ValueError: If a service with the given name is already registered.
        """
        self._ensure_free(name)
        self._factories[name] = factory

    def resolve(self, name: str) -> Any:
        """Resolves a registered dependency by its name.

        Args:
            name (str): The unique identifier for the dependency to resolve.

        Returns:
            Any: The registered instance, or the cached result of its factory.

        Raises:
            ValueError: If no service is registered under the given name.
        """
        if name in self._services:
            return self._services[name]
        if name in self._factories:
            self._services[name] = self._factories.pop(name)()
            return self._services[name]
        raise ValueError(f"No service is registered with the name: {name}")

    def is_registered(self, name: str) -> bool:
        return name in self._services or name in self._factories

    def _ensure_free(self, name: str) -> None:
        if self.is_registered(name):
            raise ValueError(f"A service with the name '{name}' is already registered.")
