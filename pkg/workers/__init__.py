"""One script per pipeline stage; each also runs standalone and prints a JSON status line."""
