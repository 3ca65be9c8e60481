import json
from pathlib import Path

import pytest
from hypothesis import strategies as st

from ccnlab.wire import Message, MsgType, Name, NackReason

FIXTURES = Path(__file__).parent / "fixtures"

# criterion number -> (label, [(test name, passed, details)])
_CRITERIA: dict[int, tuple[str, list]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or not (rep.when == "call" or rep.failed):
        return
    number, label = marker.args
    details = [f"{k}={v}" for k, v in item.user_properties]
    _CRITERIA.setdefault(number, (label, []))[1].append((item.name, rep.passed, details))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        label, results = _CRITERIA[number]
        ok = all(passed for _, passed, _ in results)
        details = "; ".join(d for _, _, ds in results for d in ds)
        failed = [name for name, passed, _ in results if not passed]
        line = f"{'PASS' if ok else 'FAIL'} {number}. {label}"
        if details:
            line += f" [{details}]"
        if failed:
            line += f" failing: {', '.join(failed)}"
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def golden_messages():
    return json.loads((FIXTURES / "golden_messages.json").read_text())


def message_from_fixture(f: dict) -> Message:
    def name(key):
        return Name.of(*f[key]) if key in f else None

    def raw(key):
        return bytes.fromhex(f[key]) if key in f else None

    return Message(
        msg_type=MsgType(f["msg_type"]),
        name=name("name"),
        supporting_name=name("supporting_name"),
        payload=raw("payload"),
        validation_alg=raw("validation_alg"),
        validation_payload=raw("validation_payload"),
        nack_reason=NackReason(f["nack_reason"]) if "nack_reason" in f else None,
    )


components = st.binary(min_size=1, max_size=12).filter(lambda b: b"/" not in b)
names = st.lists(components, max_size=8).map(lambda cs: Name(tuple(cs)))
opt_bytes = st.none() | st.binary(max_size=40)


@st.composite
def messages(draw, msg_types=(MsgType.INTEREST, MsgType.CONTENT, MsgType.NACK)):
    t = draw(st.sampled_from(msg_types))
    return Message(
        msg_type=t,
        name=draw(names),
        supporting_name=draw(st.none() | names),
        payload=draw(opt_bytes),
        validation_alg=draw(opt_bytes),
        validation_payload=draw(opt_bytes),
        nack_reason=draw(st.sampled_from(NackReason)) if t is MsgType.NACK else None,
    )
