"""cecsim tests."""
