import numpy as np
import pytest

from hsiclab.memory import Sample, SampleBuffer


def tagged(k, dims=(2, 1)):
    return Sample(np.full(dims[0], k), np.full(dims[1], k), [np.full(3, k)], tag=k)


def tags(buffer):
    return [s.tag for s in buffer]


class TestPush:
    def test_fifo(self):
        buf = SampleBuffer(2)
        for k in "abc":
            buf.push(Sample([0.0], [0.0], tag=k))
        assert tags(buf) == ["c", "b"]

    def test_capacity_one(self):
        buf = SampleBuffer(1)
        for k in range(5):
            buf.push(tagged(k))
            assert tags(buf) == [k]

    def test_full_fill_reverses_order(self):
        buf = SampleBuffer(4)
        for k in range(4):
            buf.push(tagged(k))
        assert tags(buf) == [3, 2, 1, 0]

    def test_round_trip(self):
        buf = SampleBuffer(3)
        s = tagged(9)
        buf.push(s)
        assert buf[0] is s

    def test_shape_mismatch(self):
        buf = SampleBuffer(3)
        buf.push(tagged(0))
        with pytest.raises(ValueError):
            buf.push(tagged(1, dims=(3, 1)))

    def test_invalid_capacity(self):
        with pytest.raises(ValueError):
            SampleBuffer(0)


class TestWarm:
    def test_empty(self):
        assert not SampleBuffer(2).is_warm()

    def test_after_capacity_pushes(self):
        buf = SampleBuffer(3)
        for k in range(3):
            assert not buf.is_warm()
            buf.push(tagged(k))
        assert buf.is_warm()

    def test_stays_warm(self):
        buf = SampleBuffer(2)
        for k in range(7):
            buf.push(tagged(k))
        assert buf.is_warm()


class TestViews:
    def test_stacks(self):
        buf = SampleBuffer(3)
        for k in range(3):
            buf.push(tagged(k))
        np.testing.assert_array_equal(buf.xs()[:, 0], [2, 1, 0])
        np.testing.assert_array_equal(buf.zs(0)[:, 0], [2, 1, 0])
        np.testing.assert_array_equal(buf.inputs_to(0), buf.xs())
        np.testing.assert_array_equal(buf.inputs_to(1), buf.zs(0))

    def test_newest(self):
        buf = SampleBuffer(4)
        for k in range(4):
            buf.push(tagged(k))
        assert [s.tag for s in buf.newest(2)] == [3, 2]
        with pytest.raises(ValueError):
            buf.newest(5)

    def test_clear(self):
        buf = SampleBuffer(2)
        buf.push(tagged(0))
        buf.clear()
        assert len(buf) == 0


@pytest.mark.invariant
class TestBufferInvariants:
    def test_length_and_eviction_order(self):
        for capacity in range(1, 8):
            buf = SampleBuffer(capacity)
            evicted = []
            for k in range(30):
                before = tags(buf)
                buf.push(tagged(k))
                assert len(buf) == min(k + 1, capacity)
                evicted += [t for t in before if t not in tags(buf)]
            # oldest first, matching insertion order
            assert evicted == list(range(30 - capacity))
            assert tags(buf) == list(range(29, 29 - capacity, -1))
