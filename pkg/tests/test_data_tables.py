import pytest

from droidcage.data_tables import (
    TABLE_FILES,
    DataTableError,
    default_tables,
    load_tables,
)


def test_first_names_head_matches_shipped_sample():
    tables = default_tables()
    assert tables.first_names[:10] == (
        "Aaren", "Aarika", "Abagael", "Abagail", "Abbe",
        "Abbey", "Abbi", "Abbie", "Abby", "Abbye",
    )


def test_iban_head_matches_shipped_sample():
    assert default_tables().ibans[0] == "AL94283405797977629281563659"


def test_broadcast_table_contents():
    events = default_tables().broadcast_events
    assert events[0] == "android.intent.action.BOOT_COMPLETED"
    assert "android.net.conn.CONNECTIVITY_CHANGE" in events
    assert "android.intent.action.GTALK_CONNECTED" in events
    assert len(events) == 10


def test_all_tables_non_empty():
    tables = default_tables()
    for attr in ("first_names", "last_names", "ibans", "broadcast_events",
                 "email_providers", "countries", "cities", "street_addresses",
                 "phone_numbers", "pin_codes", "passwords"):
        assert getattr(tables, attr), attr


def test_load_tables_from_directory(tmp_path):
    # the on-disk interface: newline-delimited files with the fixed names
    src = default_tables()
    for fname in TABLE_FILES.values():
        (tmp_path / fname).write_text("one\ntwo\n", encoding="utf-8")
    loaded = load_tables(tmp_path)
    assert loaded.first_names == ("one", "two")
    assert src.first_names != loaded.first_names


def test_missing_table_file_is_an_error(tmp_path):
    with pytest.raises(DataTableError, match="missing"):
        load_tables(tmp_path)


def test_empty_table_file_is_an_error(tmp_path):
    for fname in TABLE_FILES.values():
        (tmp_path / fname).write_text("x\n", encoding="utf-8")
    (tmp_path / "passwords.txt").write_text("\n", encoding="utf-8")
    with pytest.raises(DataTableError, match="empty"):
        load_tables(tmp_path)


def test_category_matching():
    tables = default_tables()
    assert tables.matches("first_name", "Aaren")
    assert not tables.matches("first_name", "xK3z")
    assert tables.matches("password", "123456")
    assert tables.matches("email", "aaren.smith@gmail.com")
    assert not tables.matches("email", "not-an-email")
    assert not tables.matches("email", "a.b@unknown-provider.example")
