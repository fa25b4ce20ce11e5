import { runScript } from './figures.js'

process.exit(runScript(5, process.argv.slice(2)))
