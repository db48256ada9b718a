from permcodes.permcodes import main

main()
