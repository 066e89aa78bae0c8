from apidialog.cli import main

main()
