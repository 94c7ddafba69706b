"""Komut satırı alt komutları; her modül kendi alt komutlarını kaydeder."""
EXIT_OK = 0
EXIT_CONFIG_ERROR = 1
EXIT_PARTIAL_FAILURE = 2
