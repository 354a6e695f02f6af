"""
Unit tests for the OBC and SLP device models.
"""

import unittest

from hypothesis import given, settings
from hypothesis import strategies as st

from src.bus.bus_core import Direction, Message, MessageKind, Segment
from src.devices.obc_model import (
    ObcConfig,
    ObcPhase,
    ObcState,
    ObservationKind,
    PendingRequest,
    obc_expected_trace,
    obc_step,
)
from src.devices.protocol import CommandSet, ObcCommand
from src.devices.slp_model import SlpConfig, SlpMode, SlpState, slp_sample, slp_step
from src.harness.trace import EventKind
from src.utils.errors import InvalidArgumentError


def _response(payload, txn, tick=5):
    return Message(tick=tick, segment=Segment.MASTER_SIDE, direction=Direction.SLAVE_TO_MASTER,
                   kind=MessageKind.READ_RESPONSE, address=0x08, payload=bytes(payload),
                   requested_len=len(payload), txn=txn)


def _to_slp(kind, payload=b'', requested_len=0, address=0x08, txn=1):
    return Message(tick=1, segment=Segment.SLAVE_SIDE, direction=Direction.MASTER_TO_SLAVE,
                   kind=kind, address=address, payload=payload, requested_len=requested_len, txn=txn)


def _requesting(remaining, txn=7, sent_at=0, n_requests=4, retries=0):
    config = ObcConfig(n_requests=n_requests, retries=retries)
    return ObcState(config=config, phase=ObcPhase.REQUESTING, remaining=remaining,
                    awaiting=PendingRequest(txn=txn, request=n_requests - remaining + 1, sent_at=sent_at, attempt=0),
                    next_txn=txn + 1, last_emit_tick=sent_at)


class TestCommandSet(unittest.TestCase):

    def test_defaults(self):
        commands = CommandSet()
        self.assertEqual((commands.start, commands.request, commands.end), (0x01, 0x02, 0x03))
        self.assertIs(commands.decode(0x02), ObcCommand.REQUEST_DATA)
        self.assertIsNone(commands.decode(0x7e))

    def test_command_bytes_must_be_distinct(self):
        with self.assertRaises(InvalidArgumentError):
            CommandSet(start=0x01, request=0x01, end=0x03)


class TestObcModel(unittest.TestCase):
    """Test cases for the OBC master."""

    def test_first_step_sends_start(self):
        state = ObcState.initial(ObcConfig(n_requests=4))
        new_state, message, events = obc_step(state, None, 0)
        self.assertEqual(message.kind, MessageKind.WRITE)
        self.assertEqual(message.payload, b'\x01')
        self.assertEqual(new_state.label, "Requesting(4)")
        self.assertEqual([e.kind for e in events], [EventKind.DEVICE_TRANSITION, EventKind.MSG_SENT])

    def test_zero_requests_goes_straight_to_send_end(self):
        state, _, _ = obc_step(ObcState.initial(ObcConfig(n_requests=0)), None, 0)
        self.assertIs(state.phase, ObcPhase.SEND_END)
        state, message, _ = obc_step(state, None, 1)
        self.assertEqual(message.payload, b'\x03')
        self.assertIs(state.phase, ObcPhase.DONE)

    def test_in_range_response_is_ok(self):
        state = _requesting(2)
        new_state, _, _ = obc_step(state, _response([0x2A], txn=7), 5)
        self.assertEqual(new_state.log[-1].kind, ObservationKind.RESPONSE_OK)
        self.assertEqual(new_state.label, "Requesting(1)")

    def test_response_records_observation_event(self):
        state = _requesting(2)
        _, message, events = obc_step(state, _response([0x2A], txn=7), 5)
        observation = next(e for e in events if e.kind is EventKind.OBSERVATION)
        self.assertEqual(observation.tick, 5)
        self.assertEqual(observation.detail,
                         {"at": 5, "kind": "ResponseOk", "payload": "2a", "request": 3, "txn": 7})
        self.assertEqual(message.kind, MessageKind.READ_REQUEST)

    def test_all_ff_response(self):
        state = _requesting(1)
        new_state, message, _ = obc_step(state, _response([0xFF], txn=7), 5)
        self.assertEqual(new_state.log[-1].kind, ObservationKind.ALL_FF)
        # last request done: EndTransmission goes out in the same step
        self.assertEqual(message.payload, b'\x03')
        self.assertIs(new_state.phase, ObcPhase.DONE)

    def test_out_of_range_response(self):
        state = _requesting(3)
        new_state, _, _ = obc_step(state, _response([0xC8], txn=7), 5)
        self.assertEqual(new_state.log[-1].kind, ObservationKind.OUT_OF_RANGE_DETECTED)

    def test_timeout_resolves_to_default_read(self):
        state = _requesting(3, sent_at=1)
        # not yet: now == sent + timeout
        waiting, message, _ = obc_step(state, None, 11)
        self.assertEqual(waiting.log, ())
        self.assertIsNone(message)
        new_state, message, _ = obc_step(state, None, 12)
        observation = new_state.log[-1]
        self.assertEqual(observation.kind, ObservationKind.ALL_FF)
        self.assertEqual(observation.payload, b'\xff')
        self.assertEqual(new_state.label, "Requesting(2)")
        # the next request goes out in the same step
        self.assertEqual(message.kind, MessageKind.READ_REQUEST)

    def test_timeout_with_retry_resends_same_request(self):
        state = _requesting(3, sent_at=1, retries=1)
        new_state, message, _ = obc_step(state, None, 12)
        self.assertEqual(new_state.log[-1].kind, ObservationKind.TIMEOUT_DETECTED)
        self.assertEqual(new_state.label, "Requesting(3)")
        self.assertEqual(new_state.awaiting.request, 2)
        self.assertEqual(new_state.awaiting.attempt, 1)
        self.assertNotEqual(message.txn, 7)

    def test_late_response_is_timeout_detected(self):
        state = _requesting(3, txn=9)
        new_state, _, _ = obc_step(state, _response([0x2A], txn=7), 5)
        self.assertEqual(new_state.log[-1].kind, ObservationKind.TIMEOUT_DETECTED)
        self.assertEqual(new_state.label, "Requesting(3)")

    def test_wrong_inbound_kind_aborts(self):
        state = _requesting(3)
        wrong = Message(tick=5, segment=Segment.MASTER_SIDE, direction=Direction.MASTER_TO_SLAVE,
                        kind=MessageKind.WRITE, address=0x08, payload=b'\x01', txn=7)
        new_state, message, _ = obc_step(state, wrong, 5)
        self.assertIs(new_state.phase, ObcPhase.ABORTED)
        self.assertEqual(new_state.log[-1].kind, ObservationKind.PROTOCOL_VIOLATION)
        self.assertIsNone(message)

    def test_never_two_messages_per_tick(self):
        state, first, _ = obc_step(ObcState.initial(ObcConfig()), None, 0)
        self.assertIsNotNone(first)
        state, second, _ = obc_step(state, None, 0)
        self.assertIsNone(second)

    def test_half_duplex_waits_for_response(self):
        state, _, _ = obc_step(ObcState.initial(ObcConfig()), None, 0)
        state, request, _ = obc_step(state, None, 1)
        self.assertEqual(request.kind, MessageKind.READ_REQUEST)
        state, nothing, _ = obc_step(state, None, 2)
        self.assertIsNone(nothing)

    def test_expected_trace_shapes(self):
        self.assertEqual([m.kind for m in obc_expected_trace(0)], [MessageKind.WRITE, MessageKind.WRITE])
        self.assertEqual([m.kind for m in obc_expected_trace(1)],
                         [MessageKind.WRITE, MessageKind.READ_REQUEST, MessageKind.READ_RESPONSE, MessageKind.WRITE])
        shape = obc_expected_trace(3)
        self.assertEqual(len(shape), 8)
        self.assertIs(shape[0].command, ObcCommand.START_ANALOG_READ)
        self.assertIs(shape[-1].command, ObcCommand.END_TRANSMISSION)

    def test_invalid_config(self):
        with self.assertRaises(InvalidArgumentError):
            ObcConfig(expected_range=(0x80, 0x10))
        with self.assertRaises(InvalidArgumentError):
            ObcConfig(request_len=0)


class TestSlpModel(unittest.TestCase):
    """Test cases for the SLP slave."""

    def test_sample_is_pinned(self):
        self.assertEqual(slp_sample(0, 0), 0x3F)
        self.assertEqual(slp_sample(0, 1), 0x08)

    def test_sample_is_deterministic(self):
        self.assertEqual(slp_sample(0, 0), slp_sample(0, 0))

    @settings(max_examples=200)
    @given(st.integers(min_value=0, max_value=2 ** 64 - 1), st.integers(min_value=0, max_value=64))
    def test_sample_is_seven_bit(self, seed, index):
        self.assertLessEqual(slp_sample(seed, index), 0x7F)

    def test_start_moves_off_to_reading(self):
        state, response, _ = slp_step(SlpState(), _to_slp(MessageKind.WRITE, b'\x01'), 2)
        self.assertIs(state.mode, SlpMode.READING)
        self.assertIsNone(response)

    def test_request_in_reading_serves_sample(self):
        reading = SlpState(mode=SlpMode.READING)
        state, response, _ = slp_step(reading, _to_slp(MessageKind.READ_REQUEST, b'\x02', 1, txn=2), 3)
        self.assertIs(state.mode, SlpMode.TRANSMITTING)
        self.assertEqual(response.payload, bytes([slp_sample(0, 0)]))
        self.assertEqual(response.txn, 2)
        self.assertEqual(response.segment, Segment.SLAVE_SIDE)
        self.assertEqual(state.samples_emitted, 1)

    def test_request_while_off_is_silent(self):
        state, response, events = slp_step(SlpState(), _to_slp(MessageKind.READ_REQUEST, b'\x02', 1), 3)
        self.assertIs(state.mode, SlpMode.OFF)
        self.assertIsNone(response)
        self.assertEqual(events, [])

    def test_end_switches_off(self):
        transmitting = SlpState(mode=SlpMode.TRANSMITTING)
        state, _, _ = slp_step(transmitting, _to_slp(MessageKind.WRITE, b'\x03'), 4)
        self.assertIs(state.mode, SlpMode.OFF)

    def test_other_address_is_ignored(self):
        state, response, events = slp_step(SlpState(), _to_slp(MessageKind.WRITE, b'\x01', address=0x09), 2)
        self.assertIs(state.mode, SlpMode.OFF)
        self.assertIsNone(response)
        self.assertEqual(events, [])

    def test_seed_changes_samples(self):
        reading = SlpState(config=SlpConfig(seed=42), mode=SlpMode.READING)
        _, response, _ = slp_step(reading, _to_slp(MessageKind.READ_REQUEST, b'\x02', 2), 3)
        self.assertEqual(response.payload, bytes([0x76, 0x52]))

    @settings(max_examples=200)
    @given(st.lists(st.sampled_from([0x01, 0x02, 0x03, 0x7e]), max_size=30))
    def test_off_before_start_and_after_end(self, commands):
        state = SlpState()
        started = False
        for i, command in enumerate(commands):
            kind = MessageKind.READ_REQUEST if command == 0x02 else MessageKind.WRITE
            state, response, _ = slp_step(state, _to_slp(kind, bytes([command]), 1 if command == 0x02 else 0), i)
            started = started or command == 0x01
            if not started:
                self.assertIs(state.mode, SlpMode.OFF)
            if command == 0x03:
                self.assertIs(state.mode, SlpMode.OFF)
            if response is not None:
                self.assertTrue(all(b <= 0x7F for b in response.payload))


if __name__ == '__main__':
    unittest.main()
