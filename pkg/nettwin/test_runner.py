from django.conf import settings
from django.test.runner import DiscoverRunner


class NetTwinTestRunner(DiscoverRunner):
    """Discover runner that leaves 'slow' acceptance runs out by default."""

    def __init__(self, *args, exclude_tags=None, tags=None, **kwargs):
        exclude_tags = set(exclude_tags or ())
        if not settings.RUN_SLOW_TESTS and 'slow' not in set(tags or ()):
            exclude_tags.add('slow')
        super().__init__(*args, exclude_tags=exclude_tags, tags=tags, **kwargs)
