// Placeholder translation unit; implementation follows.
