import pytest
from hypothesis import given
from hypothesis import strategies as st

from ccnlab.tables import (
    Cs,
    FullPolicy,
    Pit,
    PitOutcome,
    cs_insert,
    cs_lookup,
    pit_consume,
    pit_expire,
    pit_insert_or_collapse,
)
from ccnlab.wire import Message, MsgType, Name

A, B, C = Name.of("a"), Name.of("b"), Name.of("c")


def content(name: Name, payload=b"") -> Message:
    return Message(MsgType.CONTENT, name, payload=payload)


class TestPit:
    def test_create_then_collapse(self):
        pit = Pit(10)
        assert pit_insert_or_collapse(pit, A, 1, 0.0).outcome is PitOutcome.CREATED
        assert pit_insert_or_collapse(pit, A, 2, 0.1).outcome is PitOutcome.COLLAPSED
        assert pit_consume(pit, A, 0.2) == {1, 2}
        assert A not in pit

    def test_consume_missing(self):
        assert pit_consume(Pit(10), A, 0.0) is None

    def test_expired_entry_is_replaced(self):
        pit = Pit(10, lifetime=1.0)
        pit.insert_or_collapse(A, 1, 0.0)
        res = pit.insert_or_collapse(A, 2, 1.5)
        assert res.outcome is PitOutcome.CREATED
        assert pit.consume(A, 1.6) == {2}

    def test_lifetime_boundary(self):
        pit = Pit(10, lifetime=1.0)
        pit.insert_or_collapse(A, 1, 0.0)
        assert pit.get(A, 1.0) is not None
        assert pit.get(A, 1.0001) is None
        assert pit.consume(A, 1.5) is None

    def test_expire(self):
        pit = Pit(10, lifetime=1.0)
        pit.insert_or_collapse(A, 1, 0.0)
        pit.insert_or_collapse(B, 1, 0.5)
        assert pit_expire(pit, 1.2) == 1
        assert list(pit.entries) == [B]

    def test_drop_new(self):
        pit = Pit(1, FullPolicy.DROP_NEW)
        pit.insert_or_collapse(A, 1, 0.0)
        res = pit.insert_or_collapse(B, 1, 0.1)
        assert res.outcome is PitOutcome.REJECTED
        assert res.policy is FullPolicy.DROP_NEW
        assert list(pit.entries) == [A]

    def test_nack_new(self):
        pit = Pit(1, FullPolicy.NACK_NEW)
        pit.insert_or_collapse(A, 1, 0.0)
        assert pit.insert_or_collapse(B, 1, 0.1).policy is FullPolicy.NACK_NEW

    def test_collapse_allowed_when_full(self):
        pit = Pit(1)
        pit.insert_or_collapse(A, 1, 0.0)
        assert pit.insert_or_collapse(A, 2, 0.1).outcome is PitOutcome.COLLAPSED

    def test_evict_oldest(self):
        pit = Pit(2, FullPolicy.EVICT_OLDEST)
        pit.insert_or_collapse(A, 1, 0.0)
        pit.insert_or_collapse(B, 1, 0.1)
        res = pit.insert_or_collapse(C, 1, 0.2)
        assert res.outcome is PitOutcome.CREATED
        assert res.evicted.name == A
        assert list(pit.entries) == [B, C]

    def test_full_table_purges_expired_first(self):
        pit = Pit(1, FullPolicy.DROP_NEW, lifetime=1.0)
        pit.insert_or_collapse(A, 1, 0.0)
        res = pit.insert_or_collapse(B, 1, 2.0)
        assert res.outcome is PitOutcome.CREATED
        assert res.evicted is None

    def test_peak(self):
        pit = Pit(5)
        for i, n in enumerate((A, B, C)):
            pit.insert_or_collapse(n, 1, i)
        pit.consume(A, 3)
        assert len(pit) == 2 and pit.peak == 3

    def test_bad_capacity(self):
        with pytest.raises(ValueError):
            Pit(0)

    @given(st.integers(1, 8), st.sampled_from(FullPolicy),
           st.lists(st.tuples(st.integers(0, 15), st.floats(0, 0.5)), max_size=60))
    def test_capacity_never_exceeded(self, cap, policy, ops):
        pit = Pit(cap, policy, lifetime=1.0)
        now = 0.0
        for idx, dt in ops:
            now += dt
            res = pit.insert_or_collapse(Name.of(str(idx)), 0, now)
            assert len(pit) <= cap
            if res.outcome is PitOutcome.REJECTED:
                assert policy is not FullPolicy.EVICT_OLDEST
                assert all(not e.expired(now) for e in pit.entries.values())
        assert pit.peak <= cap

    @given(st.integers(1, 5), st.lists(st.integers(0, 9), max_size=40))
    def test_evict_oldest_is_fifo(self, cap, seq):
        # with no expiry and no consumption, EVICT_OLDEST is a FIFO of distinct names
        pit = Pit(cap, FullPolicy.EVICT_OLDEST, lifetime=1e9)
        ref: list[Name] = []
        for t, i in enumerate(seq):
            n = Name.of(str(i))
            res = pit.insert_or_collapse(n, 0, float(t))
            if n in ref:
                assert res.outcome is PitOutcome.COLLAPSED
                continue
            if len(ref) == cap:
                assert res.evicted.name == ref.pop(0)
            ref.append(n)
            assert list(pit.entries) == ref


class _LinkedLru:
    """Reference LRU: explicit doubly linked list plus index."""

    class _N:
        def __init__(self, key, value):
            self.key, self.value, self.prev, self.next = key, value, None, None

    def __init__(self, capacity):
        self.capacity = capacity
        self.index = {}
        self.head = self._N(None, None)
        self.tail = self._N(None, None)
        self.head.next, self.tail.prev = self.tail, self.head

    def _unlink(self, n):
        n.prev.next, n.next.prev = n.next, n.prev

    def _push(self, n):
        n.prev, n.next = self.tail.prev, self.tail
        self.tail.prev.next = n
        self.tail.prev = n

    def get(self, key):
        n = self.index.get(key)
        if n is None:
            return None
        self._unlink(n)
        self._push(n)
        return n.value

    def put(self, key, value):
        victim = None
        if key in self.index:
            n = self.index[key]
            self._unlink(n)
        else:
            if len(self.index) >= self.capacity:
                old = self.head.next
                self._unlink(old)
                del self.index[old.key]
                victim = old.key
            n = self._N(key, value)
            self.index[key] = n
        n.value = value
        self._push(n)
        return victim


class TestCs:
    def test_hit_and_miss(self):
        cs = cs_insert(Cs(4), content(A, b"x"), 0.0, 10.0)
        assert cs_lookup(cs, A, 1.0).payload == b"x"
        assert cs_lookup(cs, B, 1.0) is None

    def test_lru_eviction(self):
        cs = Cs(2)
        cs.insert(content(A), 0, 10)
        cs.insert(content(B), 0, 10)
        cs.lookup(A, 1)
        assert cs.insert(content(C), 2, 10) == B
        assert cs.lookup(B, 3) is None

    def test_expiry(self):
        cs = Cs(2)
        cs.insert(content(A), 0.0, 1.0)
        assert cs.lookup(A, 1.0) is not None
        assert cs.lookup(A, 1.01) is None
        assert len(cs) == 0

    def test_zero_capacity(self):
        cs = Cs(0)
        assert cs.insert(content(A), 0, 1) is None
        assert cs.lookup(A, 0) is None

    def test_rejects_interest(self):
        with pytest.raises(ValueError):
            Cs(2).insert(Message(MsgType.INTEREST, A), 0, 1)

    @given(st.integers(1, 6),
           st.lists(st.tuples(st.booleans(), st.integers(0, 9)), max_size=80))
    def test_matches_reference_lru(self, cap, ops):
        cs, ref = Cs(cap), _LinkedLru(cap)
        for step, (is_get, i) in enumerate(ops):
            n = Name.of(str(i))
            if is_get:
                got = cs.lookup(n, 0.0)
                want = ref.get(n)
                assert (got.payload if got else None) == want
            else:
                payload = str(step).encode()
                assert cs.insert(content(n, payload), 0.0, 1e9) == ref.put(n, payload)
            assert len(cs) == len(ref.index) <= cap
