from sops.cli import main

main()
