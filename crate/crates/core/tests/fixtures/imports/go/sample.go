package main

import "fmt"
import str "strings"

import (
	"os"
	log "github.com/sirupsen/logrus"
	_ "github.com/lib/pq"
	// "commented/out"
)

func main() { fmt.Println(str.ToUpper("x")); log.Info("y"); os.Exit(0) }
