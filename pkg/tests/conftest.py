import pytest

from blockder import FieldSpec

FIELDS = [FieldSpec(2), FieldSpec(3), FieldSpec(5), FieldSpec(0)]


@pytest.fixture(params=FIELDS, ids=str)
def field(request):
    return request.param
