# one module per subcommand, each exposing run(cfg, args) -> exit code
