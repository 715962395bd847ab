import pytest

from droidcage.app_model import (
    Settings,
    UiElement,
    apply_event,
    install_app,
    model_from_dict,
    reachable_blocks,
)
from droidcage.data_tables import default_tables
from droidcage.explorer import (
    DEFAULT_WHITELIST,
    ExplorationConfig,
    NotATextfieldError,
    TextfieldCategory,
    Whitelist,
    baseline_device,
    categorize_textfield,
    cleanup,
    explore,
    generate_fill_value,
    identify_element,
)
from droidcage.monkey import MonkeyConfig, generate_events
from droidcage.rng import Xoshiro256StarStar

from conftest import device_for

TABLES = default_tables()


# ---------------------------------------------------------------------------
# Element identification
# ---------------------------------------------------------------------------

def test_identify_prefers_id_string():
    el = UiElement(kind="button", id_string="btn_login", text="Login",
                   bounds=(0, 0, 200, 48), actions=("click",))
    key = identify_element("MainActivity", el)
    assert (key.kind, key.activity, key.value) == ("strong_id", "MainActivity", "btn_login")


def test_identify_falls_back_to_description():
    el = UiElement(kind="generic", content_description="avatar",
                   bounds=(0, 0, 64, 64))
    key = identify_element("MainActivity", el)
    assert (key.kind, key.activity, key.value) == ("strong_desc", "MainActivity", "avatar")


def test_identify_falls_back_to_text():
    el = UiElement(kind="button", text="Submit", bounds=(0, 0, 200, 48),
                   actions=("click",))
    key = identify_element("MainActivity", el)
    assert (key.kind, key.activity, key.value) == ("partial_text", None, "Submit")


def test_identify_falls_back_to_dimensions():
    el = UiElement(kind="generic", bounds=(0, 0, 200, 48))
    key = identify_element("MainActivity", el)
    assert (key.kind, key.value) == ("partial_dims", (200, 48))


# ---------------------------------------------------------------------------
# Textfield categorization and filling
# ---------------------------------------------------------------------------

def _field(**kw):
    kw.setdefault("kind", "textfield")
    kw.setdefault("bounds", (0, 0, 400, 60))
    kw.setdefault("actions", ("set_text",))
    return UiElement(**kw)


def test_categorize_email_hint():
    assert categorize_textfield(_field(hint="Email address")) == TextfieldCategory.EMAIL


def test_categorize_iban_id():
    assert categorize_textfield(_field(id_string="edit_iban")) == TextfieldCategory.IBAN


def test_categorize_unknown_hint():
    assert categorize_textfield(_field(hint="Favorite color")) == TextfieldCategory.UNCATEGORIZED


def test_categorize_is_case_insensitive():
    assert categorize_textfield(_field(hint="PHONE NUMBER")) == TextfieldCategory.PHONE_NUMBER


def test_categorize_rejects_non_textfields():
    with pytest.raises(NotATextfieldError):
        categorize_textfield(UiElement(kind="button", bounds=(0, 0, 10, 10)))


class _IndexZeroRng:
    def randrange(self, n):
        return 0

    def choice(self, seq):
        return seq[0]

    def alnum(self, length):
        return "a" * length


def test_fill_first_name_head_of_table():
    assert generate_fill_value(TextfieldCategory.FIRST_NAME, TABLES, _IndexZeroRng()) == "Aaren"


def test_fill_iban_head_of_table():
    value = generate_fill_value(TextfieldCategory.IBAN, TABLES, _IndexZeroRng())
    assert value == "AL94283405797977629281563659"


def test_fill_email_shape():
    value = generate_fill_value(TextfieldCategory.EMAIL, TABLES, Xoshiro256StarStar(5))
    local, _, domain = value.partition("@")
    first, _, last = local.partition(".")
    assert first and last
    assert domain in TABLES.email_providers
    assert value == value.lower()


def test_fill_uncategorized_is_alnum_12():
    value = generate_fill_value(TextfieldCategory.UNCATEGORIZED, TABLES,
                                Xoshiro256StarStar(9))
    assert len(value) == 12 and value.isalnum()


def test_fill_values_satisfy_their_category_gates():
    rng = Xoshiro256StarStar(11)
    for category in TextfieldCategory:
        if category == TextfieldCategory.UNCATEGORIZED:
            continue
        value = generate_fill_value(category, TABLES, rng)
        assert TABLES.matches(category.value, value), (category, value)


# ---------------------------------------------------------------------------
# Exploration
# ---------------------------------------------------------------------------

def test_explore_cracks_login_gate_monkey_does_not(login_gate):
    session = explore(login_gate, ExplorationConfig(seed=0, max_events=10_000),
                      device_for(login_gate))
    assert {"b7", "b8"} <= session.executed_blocks

    config = MonkeyConfig(seed=0, pct_syskeys=0, pct_appswitch=0,
                          throttle_ms=50, event_count=500,
                          package=login_gate.package)
    stream = generate_events(config, login_gate, device_for(login_gate))
    device = device_for(login_gate)
    monkey_blocks = set()
    for ev in stream:
        res = apply_event(device, login_gate, ev)
        device = res.device
        monkey_blocks.update(res.executed_blocks)
    assert not {"b2", "b7", "b8"} & monkey_blocks


def test_explore_one_button_app_is_two_events_max(one_button):
    session = explore(one_button, ExplorationConfig(seed=0, max_events=100),
                      device_for(one_button))
    assert len(session.events) <= 2
    assert session.executed_blocks == {"c1", "c2"}


def test_explore_triggers_declared_receiver_via_injection(boot_gate):
    session = explore(boot_gate, ExplorationConfig(seed=0, max_events=100),
                      device_for(boot_gate))
    assert {"v2", "v3"} <= session.executed_blocks
    broadcasts = [e for e in session.events if e.kind == "broadcast"]
    assert [b.action for b in broadcasts] == ["android.intent.action.BOOT_COMPLETED"]


def test_explore_is_deterministic(login_gate):
    config = ExplorationConfig(seed=7, max_events=10_000)
    a = explore(login_gate, config, device_for(login_gate))
    b = explore(login_gate, config, device_for(login_gate))
    assert a.events == b.events
    assert a.executed_blocks == b.executed_blocks


def test_no_pair_triggered_twice(login_gate):
    session = explore(login_gate, ExplorationConfig(seed=0, max_events=10_000),
                      device_for(login_gate))
    ui = [(e.target, e.kind) for e in session.events if e.is_ui]
    assert len(ui) == len(set(ui))


def test_partial_key_collision_second_element_skipped(login_gate):
    # the menu has two 300x300 logo elements; only one long_click is issued
    session = explore(login_gate, ExplorationConfig(seed=0, max_events=10_000),
                      device_for(login_gate))
    holds = [e for e in session.events
             if e.kind == "long_click" and e.target.kind == "partial_dims"]
    assert len(holds) == 1


def test_fill_before_click_within_screen_pass(login_gate):
    session = explore(login_gate, ExplorationConfig(seed=0, max_events=10_000),
                      device_for(login_gate))
    # replay to segment the event log by screen; within one stay on a
    # screen no set_text may follow a click-like action
    device = device_for(login_gate)
    clicked = False
    for ev in session.events:
        ctx = device.context(login_gate.package)
        before = (ctx.activity, ctx.state)
        res = apply_event(device, login_gate, ev)
        device = res.device
        ctx = device.context(login_gate.package)
        if ev.kind in ("click", "long_click", "scroll"):
            clicked = True
        elif ev.kind == "set_text":
            assert not clicked, "set_text scheduled after a click on the same screen"
        if (ctx.activity, ctx.state) != before or not ev.is_ui:
            clicked = False


def test_explore_attains_oracle_on_eligible_fixtures(tiny_taps, one_button, boot_gate):
    for app in (tiny_taps, one_button, boot_gate):
        oracle = reachable_blocks(app)
        session = explore(app, ExplorationConfig(seed=3, max_events=10_000),
                          device_for(app))
        assert session.executed_blocks == set(oracle)


def test_explore_login_gate_misses_only_error_path_and_dead_block(login_gate):
    # the error path needs a click before the fills, which the visited-set
    # plus fill-first ordering forbids; b14 is dead by construction
    session = explore(login_gate, ExplorationConfig(seed=0, max_events=10_000),
                      device_for(login_gate))
    assert session.executed_blocks == reachable_blocks(login_gate) - {"b5"}


def test_new_elements_on_revisited_screen_are_scheduled():
    doc = {
        "package": "com.t.grow", "main_activity": "Main", "own_number": "5550000",
        "alphabet": [],
        "activities": [{
            "name": "Main", "initial_state": "home",
            "states": [
                {"id": "home", "elements": [
                    {"kind": "button", "id": "btn_a", "text": "A",
                     "bounds": [0, 0, 100, 100], "actions": ["click"]},
                    {"kind": "button", "id": "btn_next", "text": "N",
                     "bounds": [0, 200, 100, 100], "actions": ["click"]},
                ]},
                {"id": "home2", "elements": [
                    {"kind": "button", "id": "btn_a", "text": "A",
                     "bounds": [0, 0, 100, 100], "actions": ["click"]},
                    {"kind": "button", "id": "btn_b", "text": "B",
                     "bounds": [0, 400, 100, 100], "actions": ["click"]},
                ]},
            ],
        }],
        "blocks": [
            {"id": "a1", "class": "c.Main", "method": "onA"},
            {"id": "n1", "class": "c.Main", "method": "onNext"},
            {"id": "b1", "class": "c.Main", "method": "onB"},
        ],
        "receivers": {"declared": [], "dynamic": []},
        "transitions": [
            {"from": {"activity": "Main", "state": "home", "element": "btn_a"},
             "trigger": {"action": "click"}, "to": None, "blocks": ["a1"]},
            {"from": {"activity": "Main", "state": "home", "element": "btn_next"},
             "trigger": {"action": "click"},
             "to": {"activity": "Main", "state": "home2"}, "blocks": ["n1"]},
            {"from": {"activity": "Main", "state": "home2", "element": "btn_b"},
             "trigger": {"action": "click"}, "to": None, "blocks": ["b1"]},
        ],
    }
    app = model_from_dict(doc)
    session = explore(app, ExplorationConfig(seed=0, max_events=100),
                      install_app(baseline_device(), app))
    assert session.executed_blocks == {"a1", "n1", "b1"}
    clicks_on_a = [e for e in session.events
                   if e.is_ui and e.target.value == "btn_a"]
    assert len(clicks_on_a) == 1  # the shared element is not re-triggered


def test_monkey_phase_is_prefix_of_combined_session(login_gate):
    mc = MonkeyConfig(seed=0, event_count=40, package=login_gate.package)
    stream = generate_events(mc, login_gate, device_for(login_gate))
    combined = explore(
        login_gate,
        ExplorationConfig(seed=0, max_events=10_000, run_monkey_first=True,
                          monkey_config=mc),
        device_for(login_gate),
    )
    assert combined.events[:40] == stream


def test_crash_halts_exploration_with_partial_coverage(crash_first):
    session = explore(crash_first, ExplorationConfig(seed=0, max_events=100),
                      device_for(crash_first))
    assert session.crashed
    assert session.executed_blocks == {"x1"}


# ---------------------------------------------------------------------------
# Cleanup
# ---------------------------------------------------------------------------

WL = Whitelist(processes=frozenset({"system_server"}),
               packages=frozenset({"com.android.systemui"}))
BASE = Settings(wifi=True, data_network=True, sound_volume=50)


def test_cleanup_removes_stray_package():
    device = baseline_device(WL, BASE)
    device.installed_apps.add("com.evil.drop")
    device.running_processes.add("com.evil.drop")
    cleaned = cleanup(device, WL, BASE)
    assert "com.evil.drop" not in cleaned.installed_apps
    assert "com.evil.drop" not in cleaned.running_processes


def test_cleanup_is_idempotent():
    device = baseline_device(WL, BASE)
    device.installed_apps.add("com.stray.app")
    once = cleanup(device, WL, BASE)
    assert cleanup(once, WL, BASE) == once


def test_cleanup_on_clean_device_is_identity():
    device = baseline_device(WL, BASE)
    assert cleanup(device, WL, BASE) == device


def test_cleanup_restores_settings():
    device = baseline_device(WL, BASE)
    device.settings.wifi = False
    device.settings.sound_volume = 0
    cleaned = cleanup(device, WL, BASE)
    assert cleaned.settings == BASE


def test_cleanup_after_session_restores_baseline(login_gate):
    session = explore(login_gate, ExplorationConfig(seed=0, max_events=10_000),
                      device_for(login_gate))
    cleaned = cleanup(session.device, DEFAULT_WHITELIST)
    assert cleaned == baseline_device(DEFAULT_WHITELIST)
