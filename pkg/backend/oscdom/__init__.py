# oscdom numerical core
