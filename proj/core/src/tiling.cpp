namespace miurex {}
