import pytest

from mpskmax._backend import available_backends


@pytest.fixture(params=available_backends())
def backend(request):
    return request.param
