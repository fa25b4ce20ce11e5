import { runScript } from './figures.js'

process.exit(runScript(4, process.argv.slice(2)))
