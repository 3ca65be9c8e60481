import pytest
from hypothesis import given
from hypothesis import strategies as st

from ccnlab.nametree import Fib, FibFull, aggregate_prefixes, best_route, fib_insert, fib_lookup
from ccnlab.wire import Name, parse_lci

# small alphabet so random names actually share prefixes
small_names = st.lists(st.sampled_from([b"a", b"b", b"c"]), max_size=5).map(
    lambda cs: Name(tuple(cs)))


def linear_lookup(routes: dict[Name, int], name: Name):
    best = None
    for prefix, iface in routes.items():
        if prefix.is_prefix_of(name) and (best is None or len(prefix) > len(best[0])):
            best = (prefix, iface)
    return None if best is None else best[1]


def common_prefix(names):
    out = []
    for group in zip(*(n.components for n in names)):
        if len(set(group)) != 1:
            break
        out.append(group[0])
    return Name(tuple(out))


class TestLookup:
    def test_longest_wins(self):
        fib = Fib()
        fib.insert(parse_lci("lci:/bbc"), 1)
        fib.insert(parse_lci("lci:/bbc/news"), 2)
        assert fib.lookup(parse_lci("lci:/bbc/news/today")) == 2
        assert fib.lookup(parse_lci("lci:/bbc/sport")) == 1
        assert fib.lookup(parse_lci("lci:/cnn")) is None

    def test_default_route(self):
        fib = fib_insert(Fib(), Name(), 7)
        assert fib_lookup(fib, parse_lci("lci:/anything/at/all")) == 7

    def test_component_boundary(self):
        fib = fib_insert(Fib(), Name.of("bb"), 1)
        assert fib.lookup(Name.of("bbc")) is None

    def test_overwrite_keeps_size(self):
        fib = Fib()
        fib.insert(Name.of("a"), 1)
        fib.insert(Name.of("a"), 2)
        assert len(fib) == 1
        assert fib.get(Name.of("a")) == 2

    def test_lookup_prefix(self):
        fib = fib_insert(Fib(), Name.of("edu", "uci"), 3)
        assert fib.lookup_prefix(Name.of("edu", "uci", "ics")) == (Name.of("edu", "uci"), 3)
        assert fib.lookup_prefix(Name.of("edu")) is None

    def test_get_is_exact(self):
        fib = fib_insert(Fib(), Name.of("a"), 1)
        assert fib.get(Name.of("a", "b")) is None

    @given(st.dictionaries(small_names, st.integers(0, 9)), small_names)
    def test_matches_linear_scan(self, routes, name):
        fib = Fib()
        for p, i in routes.items():
            fib.insert(p, i)
        assert fib.lookup(name) == linear_lookup(routes, name)
        assert len(fib) == len(routes)


class TestCapacity:
    def test_full(self):
        fib = Fib(capacity=1)
        fib.insert(Name.of("a"), 1)
        with pytest.raises(FibFull):
            fib.insert(Name.of("b", "c"), 2)
        assert len(fib) == 1
        assert list(fib.items()) == [(Name.of("a"), 1)]

    def test_update_allowed_when_full(self):
        fib = Fib(capacity=1)
        fib.insert(Name.of("a"), 1)
        fib.insert(Name.of("a"), 5)
        assert fib.lookup(Name.of("a")) == 5


class TestDumpLoad:
    def test_format(self):
        fib = Fib()
        fib.insert(Name.of("b"), 2)
        fib.insert(Name.of("a", "x"), 1)
        assert fib.dump() == "lci:/a/x 1\nlci:/b 2\n"

    @given(st.dictionaries(small_names, st.integers(0, 9)))
    def test_round_trip(self, routes):
        fib = Fib()
        for p, i in routes.items():
            fib.insert(p, i)
        again = Fib.load(fib.dump())
        assert dict(again.items()) == routes

    def test_comments_and_errors(self):
        assert len(Fib.load("# header\n\nlci:/a 1\n")) == 1
        with pytest.raises(ValueError):
            Fib.load("lci:/a\n")


class TestAggregate:
    def test_example(self):
        names = [parse_lci(f"lci:/edu/uci/{u}") for u in ("ics", "eng", "bio")]
        assert aggregate_prefixes(names) == Name.of("edu", "uci")

    def test_disjoint(self):
        assert aggregate_prefixes([Name.of("a"), Name.of("b")]) == Name()

    def test_single(self):
        assert aggregate_prefixes([Name.of("a", "b")]) == Name.of("a", "b")

    def test_empty(self):
        with pytest.raises(ValueError):
            aggregate_prefixes([])

    @given(st.lists(small_names, min_size=1, max_size=6))
    def test_matches_oracle(self, names):
        agg = aggregate_prefixes(names)
        assert agg == common_prefix(names)
        assert all(agg.is_prefix_of(n) for n in names)


def test_best_route():
    assert best_route(Name(), [3, 1]) == 3
    assert best_route(Name(), []) is None
